"""Run configuration: JSON schema, validation, canonical form, manifest hashing.

A config is a nested JSON object.  Every field has a default; unknown keys are
rejected with a field-path message ("grid.Ny: ...").  The canonical form (all
defaults filled, schema key order) is what gets echoed into manifests and
hashed, so identical logical configs always produce identical artifacts.
"""

from __future__ import annotations

import hashlib
import json
import math
from pathlib import Path
from typing import Any, Callable, Mapping

__all__ = [
    "VERSION",
    "MODES",
    "ConfigError",
    "RunConfig",
    "parse_config",
    "default_config",
]

VERSION = "0.1.0"

MODES = (
    "eps",
    "hydrostatic",
    "linear",
    "illposedness-sweep",
    "oscillator",
    "convergence",
    "decay",
    "property-suite",
)

_SCHEDULES = ("constant_rate", "gwp_decaying", "none")

_TWO_PI = 2.0 * math.pi

# theta1 must stay below 1/(16*sqrt(2)); the forcing-radius budget breaks above it.
_THETA1_MAX = 1.0 / (16.0 * math.sqrt(2.0))


class ConfigError(ValueError):
    """Schema violation; message starts with the offending field path."""


def _is_int(v: Any) -> bool:
    return isinstance(v, int) and not isinstance(v, bool)


def _is_real(v: Any) -> bool:
    return (_is_int(v) or isinstance(v, float)) and math.isfinite(v)


# One schema row: (kind, default, predicate on the coerced value, hint).
# kinds: int, float, bool, str, and the nullable / list variants.
_Row = tuple[str, Any, Callable[[Any], bool] | None, str]


def _row(kind: str, default: Any, check: Callable[[Any], bool] | None = None,
         hint: str = "") -> _Row:
    return (kind, default, check, hint)


_SCHEMA: dict[str, Any] = {
    "mode": _row("str", "linear", lambda v: v in MODES,
                 "must be one of " + ", ".join(MODES)),
    "seed": _row("int", 0, lambda v: v >= 0, "must be >= 0"),
    "grid": {
        "Nx": _row("int", 32, lambda v: v >= 8 and v % 2 == 0,
                   "must be an even integer >= 8"),
        "Ny": _row("int", 128, lambda v: v >= 8, "must be an integer >= 8"),
        "Lx": _row("float", _TWO_PI, lambda v: abs(v - _TWO_PI) <= 1e-12,
                   "only the 2*pi-periodic strip is supported"),
    },
    "params": {
        "eps": _row("float", 0.5, lambda v: 0.0 < v <= 1.0, "must be in (0, 1]"),
        "mu": _row("float", 1.0, lambda v: v > 0.0, "must be > 0"),
        "mu0": _row("float", 1.0, lambda v: v > 0.0, "must be > 0"),
        "alpha": _row("float?", None, lambda v: v is None or v > 0.0,
                      "must be > 0 when set"),
        "normalized": _row("bool", False),
    },
    "gevrey": {
        "delta0": _row("float", 1.0, lambda v: v > 0.0, "must be > 0"),
        "s": _row("float", 10.0, lambda v: v >= 0.0, "must be >= 0"),
        "schedule": _row("str", "constant_rate", lambda v: v in _SCHEDULES,
                         "must be one of " + ", ".join(_SCHEDULES)),
        "C": _row("float", 1.0, lambda v: v > 0.0, "must be > 0"),
        "C_in": _row("float", 1.0, lambda v: v > 0.0, "must be > 0"),
        "theta": _row("float?", None, lambda v: v is None or 0.0 < v < 96.0,
                      "must be in (0, 96) when set"),
    },
    "time": {
        "T": _row("float", 0.01, lambda v: v > 0.0, "must be > 0"),
        "dt": _row("float", 1e-3, lambda v: v > 0.0, "must be > 0"),
        "stride": _row("int", 1, lambda v: v >= 1, "must be >= 1"),
    },
    "data": {
        "amplitude": _row("float", 0.01, lambda v: v >= 0.0, "must be >= 0"),
        "seed": _row("int?", None, lambda v: v is None or v >= 0,
                     "must be >= 0 when set"),
        "kappa": _row("float?", None, lambda v: v is None or v > 0.0,
                      "must be > 0 when set"),
        "profile": _row("str", "sine", lambda v: v == "sine",
                        "only the 'sine' family is implemented"),
    },
    "hydrostatic": {
        # False: the sign consistent with expanding alpha*(f*b - u*b**2), b = 1+h.
        # True: the alternative printed sign (+2uh) kept for comparison runs.
        "printed_coupling_sign": _row("bool", False),
    },
    "illposedness": {
        "k_list": _row("list_int", [-256, -1024, -4096],
                       lambda v: len(v) >= 1 and all(k != 0 for k in v),
                       "must be a nonempty list of nonzero integers"),
        "C0": _row("float", 1.0, lambda v: v > 0.0, "must be > 0"),
        "s_growth": _row("float", 0.25, lambda v: 0.0 <= v < 0.5,
                         "must be in [0, 0.5)"),
        "theta1": _row("float", 0.04, lambda v: 0.0 < v < _THETA1_MAX,
                       "must be in (0, 1/(16*sqrt(2)))"),
        "m0": _row("float", 1.0, lambda v: v > 0.0, "must be > 0"),
        "T0": _row("float?", None, lambda v: v is None or v > 0.0,
                   "must be > 0 when set"),
        "dt": _row("float", 0.002, lambda v: v > 0.0, "must be > 0"),
        "Ny": _row("int?", None, lambda v: v is None or v >= 8,
                   "must be >= 8 when set"),
        "h2_window": _row("float", 0.2, lambda v: v > 0.0, "must be > 0"),
    },
    "oscillator": {
        "k": _row("int", -4096, lambda v: v != 0, "must be nonzero"),
        "count": _row("int", 4, lambda v: 1 <= v <= 10, "must be in [1, 10]"),
        "Ny": _row("int?", None, lambda v: v is None or v >= 8,
                   "must be >= 8 when set"),
    },
    "convergence": {
        "eps_list": _row("list_float", [0.2, 0.1, 0.05, 0.025],
                         lambda v: len(v) >= 1 and all(0.0 < e <= 1.0 for e in v),
                         "must be a nonempty list of values in (0, 1]"),
        "dt": _row("float", 2.5e-4, lambda v: v > 0.0, "must be > 0"),
        "T": _row("float", 0.5, lambda v: v > 0.0, "must be > 0"),
        "s": _row("float", 6.0, lambda v: v >= 0.0, "must be >= 0"),
        "Nx": _row("int", 32, lambda v: v >= 8 and v % 2 == 0,
                   "must be an even integer >= 8"),
        "Ny": _row("int", 128, lambda v: v >= 8, "must be an integer >= 8"),
        "amplitude": _row("float", 0.01, lambda v: v >= 0.0, "must be >= 0"),
        "delta0": _row("float", 1.0, lambda v: v > 0.0, "must be > 0"),
    },
    "decay": {
        "eps": _row("float", 0.5, lambda v: 0.0 < v <= 1.0, "must be in (0, 1]"),
        "dt": _row("float", 0.01, lambda v: v > 0.0, "must be > 0"),
        "T": _row("float", 40.0, lambda v: v > 0.0, "must be > 0"),
        "kappa": _row("float", 0.1, lambda v: v > 0.0, "must be > 0"),
        "Nx": _row("int", 32, lambda v: v >= 8 and v % 2 == 0,
                   "must be an even integer >= 8"),
        "Ny": _row("int", 128, lambda v: v >= 8, "must be an integer >= 8"),
        "s": _row("float", 6.0, lambda v: v >= 0.0, "must be >= 0"),
        "delta0": _row("float", 1.0, lambda v: v > 0.0, "must be > 0"),
        "amplitude": _row("float", 0.01, lambda v: v >= 0.0, "must be >= 0"),
    },
    "output": {
        "dir": _row("str?", None),
        "quiet": _row("bool", False),
    },
}


def _coerce(path: str, row: _Row, value: Any) -> Any:
    kind, _default, check, hint = row
    base = kind.rstrip("?")
    nullable = kind.endswith("?")
    if value is None:
        if nullable:
            coerced: Any = None
        else:
            raise ConfigError(f"{path}: may not be null")
    elif base == "int":
        if not _is_int(value):
            raise ConfigError(f"{path}: expected an integer, got {value!r}")
        coerced = value
    elif base == "float":
        if not _is_real(value):
            raise ConfigError(f"{path}: expected a finite number, got {value!r}")
        coerced = float(value)
    elif base == "bool":
        if not isinstance(value, bool):
            raise ConfigError(f"{path}: expected true/false, got {value!r}")
        coerced = value
    elif base == "str":
        if not isinstance(value, str):
            raise ConfigError(f"{path}: expected a string, got {value!r}")
        coerced = value
    elif base == "list_int":
        if not isinstance(value, list) or not all(_is_int(v) for v in value):
            raise ConfigError(f"{path}: expected a list of integers, got {value!r}")
        coerced = list(value)
    elif base == "list_float":
        if not isinstance(value, list) or not all(_is_real(v) for v in value):
            raise ConfigError(f"{path}: expected a list of numbers, got {value!r}")
        coerced = [float(v) for v in value]
    else:  # pragma: no cover - schema author error
        raise AssertionError(kind)
    if check is not None and not check(coerced):
        raise ConfigError(f"{path}: {hint}")
    return coerced


def _validate(raw: Mapping[str, Any]) -> dict[str, Any]:
    if not isinstance(raw, Mapping):
        raise ConfigError(f"config root: expected an object, got {type(raw).__name__}")
    for key in raw:
        if key not in _SCHEMA:
            raise ConfigError(f"{key}: unknown key")
    out: dict[str, Any] = {}
    for key, spec in _SCHEMA.items():
        if isinstance(spec, dict):
            section = raw.get(key, {})
            if not isinstance(section, Mapping):
                raise ConfigError(f"{key}: expected an object")
            for sub in section:
                if sub not in spec:
                    raise ConfigError(f"{key}.{sub}: unknown key")
            out[key] = {
                sub: _coerce(f"{key}.{sub}", row, section[sub])
                if sub in section else _clone(row[1])
                for sub, row in spec.items()
            }
        else:
            out[key] = (_coerce(key, spec, raw[key])
                        if key in raw else _clone(spec[1]))
    return out


def _clone(v: Any) -> Any:
    return list(v) if isinstance(v, list) else v


class RunConfig:
    """Validated, fully defaulted configuration.

    Equality and hashing go through the canonical dict, so parse(emit(c)) == c.
    """

    def __init__(self, canonical: dict[str, Any]):
        self._data = canonical

    @property
    def mode(self) -> str:
        return self._data["mode"]

    @property
    def seed(self) -> int:
        return self._data["seed"]

    def section(self, name: str) -> dict[str, Any]:
        block = self._data[name]
        if not isinstance(block, dict):
            raise KeyError(f"{name} is not a section")
        return {k: _clone(v) for k, v in block.items()}

    def get(self, path: str) -> Any:
        node: Any = self._data
        for part in path.split("."):
            node = node[part]
        return _clone(node)

    def canonical(self) -> dict[str, Any]:
        return json.loads(self.emit())

    def emit(self) -> str:
        return json.dumps(self._data, indent=2) + "\n"

    def manifest_hash(self) -> str:
        payload = json.dumps(self._data, sort_keys=True,
                             separators=(",", ":")) + VERSION
        return hashlib.sha256(payload.encode("utf-8")).hexdigest()[:12]

    def manifest(self, **extra: Any) -> dict[str, Any]:
        """Manifest dict: config echo + version + hash, plus caller extras.

        Wall-time style extras are recorded but excluded from the hash by
        construction (the hash covers the canonical config and version only).
        """
        out = {
            "version": VERSION,
            "manifest_hash": self.manifest_hash(),
            "config": self.canonical(),
        }
        out.update(extra)
        return out

    def with_overrides(self, **top_level: Any) -> "RunConfig":
        """New config with top-level scalar fields replaced (mode, seed)."""
        merged = self.canonical()
        merged.update(top_level)
        return parse_config(merged)

    def data_seed(self) -> int:
        ds = self._data["data"]["seed"]
        return self._data["seed"] if ds is None else ds

    def __eq__(self, other: object) -> bool:
        return isinstance(other, RunConfig) and self._data == other._data

    def __repr__(self) -> str:
        return f"RunConfig(mode={self.mode!r}, hash={self.manifest_hash()})"


def parse_config(source: Mapping[str, Any] | str | Path) -> RunConfig:
    """Validate a config given as a mapping, a JSON string, or a file path."""
    if isinstance(source, Mapping):
        raw: Any = source
    else:
        text = str(source)
        if not text.lstrip().startswith("{"):
            text = Path(source).read_text(encoding="utf-8")
        try:
            raw = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config root: invalid JSON ({exc})") from exc
    return RunConfig(_validate(raw))


def default_config(mode: str = "linear", seed: int | None = None,
                   **sections: Mapping[str, Any]) -> RunConfig:
    """Convenience builder: defaults plus per-section overrides."""
    raw: dict[str, Any] = {"mode": mode}
    if seed is not None:
        raw["seed"] = seed
    raw.update({k: dict(v) for k, v in sections.items()})
    return parse_config(raw)
