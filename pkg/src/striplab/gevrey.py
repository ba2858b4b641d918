"""Analytic-regularity weights, shrinking-radius schedules, weighted norms.

The weight acting on an x-wavenumber xi is

    A(xi) = exp(delta * <xi>**0.5) * <xi>**s,    <xi> = (1 + xi**2)**0.5,

with radius delta = delta0 - lambda(t) spent along a schedule lambda(t).
Norms pair the multiplier with an l2 sum over wavenumbers and either a
trapezoid integral across the strip (p=2) or a sup in y (p=inf).

Everything is kept in log space until the last moment so that large
exponents degrade to inf (or a GevreyBlowupError on field application)
instead of producing silent garbage.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Optional

import numpy as np

from .grid import SpectralField, dealiased_product, trapz_y

__all__ = [
    "EXP_GUARD",
    "GevreyBlowupError",
    "GevreyWeight",
    "LambdaSchedule",
    "apply_As",
    "bracket",
    "check_commutator_bounds",
    "check_product_law",
    "check_triangle_anchor",
    "gevrey_multiplier",
    "gevrey_norm",
    "lambda_schedule",
    "log_gevrey_multiplier",
    "weighted_time_derivative",
]

# np.exp overflows just above 709; leave margin for the coefficient itself
EXP_GUARD = 700.0
COEFF_CEIL = 1e300


class GevreyBlowupError(RuntimeError):
    """Weighted coefficients left the representable range."""


def bracket(xi):
    """Japanese bracket <xi> = sqrt(1 + xi^2)."""
    return np.hypot(1.0, np.asarray(xi, dtype=float))


@dataclass(frozen=True)
class LambdaSchedule:
    """Radius-spending schedule lambda(t), lambda(0) = 0, lambda_dot > 0.

    kind "constant_rate": lambda_dot = 32*C*C_in, the local-wellposedness
    budget; kind "gwp_decaying": lambda_dot = 16*exp(-theta*t/(3*delta0)),
    whose total spend stays finite so the radius never hits zero, at the
    price of overshooting delta0/2 in finite time.
    """

    kind: str = "constant_rate"
    C: float = 1.0
    C_in: float = 1.0
    delta0: float = 1.0
    theta: Optional[float] = None

    def __post_init__(self):
        if self.kind not in ("constant_rate", "gwp_decaying"):
            raise ValueError(f"unknown schedule kind {self.kind!r}")
        if self.delta0 <= 0.0:
            raise ValueError("delta0 must be positive")
        if self.C <= 0.0 or self.C_in <= 0.0:
            raise ValueError("C and C_in must be positive")
        if self.kind == "gwp_decaying":
            if self.theta is None or not 0.0 < self.theta < 96.0:
                raise ValueError("gwp_decaying needs theta in (0, 96)")

    def horizon(self) -> float:
        """Earliest t with lambda(t) = delta0/2 (half the radius spent)."""
        if self.kind == "constant_rate":
            return self.delta0 / (64.0 * self.C * self.C_in)
        th = float(self.theta)
        return -(3.0 * self.delta0 / th) * np.log1p(-th / 96.0)


def lambda_schedule(t, schedule: Optional[LambdaSchedule]):
    """Evaluate (lambda, lambda_dot, lambda_ddot) at time(s) t."""
    ta = np.asarray(t, dtype=float)
    if schedule is None:
        z = np.zeros_like(ta)
        out = (z, z.copy(), z.copy())
    elif schedule.kind == "constant_rate":
        r = 32.0 * schedule.C * schedule.C_in
        out = (r * ta, np.full_like(ta, r), np.zeros_like(ta))
    else:
        a = schedule.theta / (3.0 * schedule.delta0)
        e = np.exp(-a * ta)
        out = ((48.0 * schedule.delta0 / schedule.theta) * (1.0 - e),
               16.0 * e,
               -16.0 * a * e)
    if ta.ndim == 0:
        return float(out[0]), float(out[1]), float(out[2])
    return out


@dataclass(frozen=True)
class GevreyWeight:
    """Weight family A with radius delta0 - lambda(t) and power index s.

    schedule=None freezes the radius at delta0, which is how fixed-radius
    monitor norms (e.g. at half the initial radius) are expressed.
    """

    delta0: float
    s: float
    schedule: Optional[LambdaSchedule] = None

    def radius(self, t: float = 0.0) -> float:
        if self.schedule is None:
            return self.delta0
        lam, _, _ = lambda_schedule(t, self.schedule)
        return self.delta0 - lam

    def rate(self, t: float = 0.0) -> tuple:
        """(lambda_dot, lambda_ddot) at t; zeros for a frozen weight."""
        if self.schedule is None:
            return 0.0, 0.0
        _, d1, d2 = lambda_schedule(t, self.schedule)
        return d1, d2

    def shifted(self, ds: float) -> "GevreyWeight":
        """Same radius and schedule, power index s + ds."""
        return replace(self, s=self.s + ds)

    def horizon_exceeded(self, t: float) -> bool:
        """True once more than half the initial radius has been spent."""
        return self.radius(t) < 0.5 * self.delta0 - 1e-12


def log_gevrey_multiplier(xi, delta: float, s: float):
    br = bracket(xi)
    return delta * np.sqrt(br) + s * np.log(br)


def gevrey_multiplier(xi, delta: float, s: float):
    lg = log_gevrey_multiplier(xi, delta, s)
    if np.any(lg > EXP_GUARD):
        raise GevreyBlowupError(
            f"weight exponent {np.max(lg):.3g} exceeds representable range")
    return np.exp(lg)


def apply_As(f: SpectralField, weight: GevreyWeight, t: float = 0.0,
             inverse: bool = False) -> SpectralField:
    """Multiply f mode-wise by A (or its reciprocal).

    The multiplier is even in the wavenumber, so conjugate symmetry of
    real fields survives and the reality flag is kept.
    """
    lg = log_gevrey_multiplier(f.grid.k, weight.radius(t), weight.s)
    if inverse:
        lg = -lg
    if np.any(lg > EXP_GUARD):
        raise GevreyBlowupError(
            f"weight exponent {np.max(lg):.3g} exceeds representable range")
    out = f.copy()
    out.coeffs = f.coeffs * np.exp(lg)[:, None]
    peak = np.max(np.abs(out.coeffs)) if out.coeffs.size else 0.0
    if not np.isfinite(peak) or peak > COEFF_CEIL:
        raise GevreyBlowupError(
            f"weighted coefficients reached {peak:.3g}")
    return out


def gevrey_norm(f: SpectralField, weight: GevreyWeight, t: float = 0.0,
                p=2) -> float:
    """Weighted norm; p=2 integrates across the strip, p=inf takes the sup.

    Returns inf (never raises) when the value leaves double range, so
    blow-up monitors can compare against thresholds directly.
    """
    lg = log_gevrey_multiplier(f.grid.k, weight.radius(t), weight.s)
    mx = float(np.max(lg))
    W = np.abs(f.coeffs) * np.exp(lg - mx)[:, None]
    peak = float(np.max(W)) if W.size else 0.0
    if not np.isfinite(peak):
        return np.inf
    if peak == 0.0:
        return 0.0
    Ws = W / peak
    per_y_sq = np.sum(Ws * Ws, axis=0)
    if p == 2:
        val = float(np.sqrt(trapz_y(per_y_sq, f.grid.dy)))
    elif p == np.inf or p == "inf":
        val = float(np.sqrt(np.max(per_y_sq)))
    else:
        raise ValueError(f"p must be 2 or inf, got {p!r}")
    if val == 0.0:
        return 0.0
    log_out = np.log(val) + np.log(peak) + mx
    if log_out > 709.0:
        return np.inf
    return float(np.exp(log_out))


def weighted_time_derivative(df_dt: SpectralField, f: SpectralField,
                             weight: GevreyWeight, t: float = 0.0
                             ) -> SpectralField:
    """Coefficients of d/dt [A(t) f(t)] given the tendency df/dt.

    The shrinking radius contributes -lambda_dot * <k>**0.5 * A f on top
    of A applied to the tendency.
    """
    lam_dot, _ = weight.rate(t)
    out = apply_As(df_dt, weight, t)
    if lam_dot != 0.0:
        af = apply_As(f, weight, t)
        root = np.sqrt(bracket(f.grid.k))
        out.coeffs = out.coeffs - lam_dot * root[:, None] * af.coeffs
    return out


def _log_A(xi, delta, s):
    return log_gevrey_multiplier(xi, delta, s)


def check_commutator_bounds(delta: float, s: float, n_samples: int = 20000,
                            seed: int = 0, c: float = 0.5) -> dict:
    """Empirical constants for the three-regime bound on |A(xi) - A(eta)|.

    Regimes split on the relative size of the transfer rho = xi - eta:
      near_diagonal  |rho| <= c|eta|:
          majorant A_{s-3/4}(eta) * A_1(rho) * <xi>**(1/4)
      low_first      |eta| <= c|rho|:
          majorant A_0(eta) * A_s(rho)
      comparable     c|eta| <= |rho| <= |eta|/c:
          majorant A_{s-1}(eta) * A_1(rho)

    Returns the observed sup of |A(xi)-A(eta)| / majorant per regime;
    all three stay bounded as the sample count and range grow.
    """
    rng = np.random.default_rng(seed)

    def lhs_log_ratio(xi, eta, rhs_log):
        a_xi = np.exp(np.minimum(_log_A(xi, delta, s), 700.0))
        a_eta = np.exp(np.minimum(_log_A(eta, delta, s), 700.0))
        lhs = np.abs(a_xi - a_eta)
        with np.errstate(divide="ignore"):
            return np.where(lhs > 0.0, np.log(lhs) - rhs_log, -np.inf)

    def sample_eta(n):
        mag = 10.0 ** rng.uniform(-1.0, 3.5, size=n)
        return mag * rng.choice([-1.0, 1.0], size=n)

    out = {}

    # near diagonal: xi = eta + rho with |rho| <= c|eta|
    eta = sample_eta(n_samples)
    rho = rng.uniform(-1.0, 1.0, n_samples) * c * np.abs(eta)
    xi = eta + rho
    rhs_log = (_log_A(eta, delta, s - 0.75) + _log_A(rho, delta, 1.0)
               + 0.25 * np.log(bracket(xi)))
    out["near_diagonal"] = float(np.exp(np.max(lhs_log_ratio(xi, eta, rhs_log))))

    # low first factor: |eta| <= c|rho|
    rho = sample_eta(n_samples)
    eta = rng.uniform(-1.0, 1.0, n_samples) * c * np.abs(rho)
    xi = eta + rho
    rhs_log = _log_A(eta, delta, 0.0) + _log_A(rho, delta, s)
    out["low_first"] = float(np.exp(np.max(lhs_log_ratio(xi, eta, rhs_log))))

    # comparable: c|eta| <= |rho| <= |eta|/c
    eta = sample_eta(n_samples)
    scale = np.exp(rng.uniform(np.log(c), -np.log(c), n_samples))
    rho = scale * np.abs(eta) * rng.choice([-1.0, 1.0], size=n_samples)
    xi = eta + rho
    rhs_log = _log_A(eta, delta, s - 1.0) + _log_A(rho, delta, 1.0)
    out["comparable"] = float(np.exp(np.max(lhs_log_ratio(xi, eta, rhs_log))))

    return out


def check_triangle_anchor(delta: float, s: float, n_samples: int = 100000,
                          seed: int = 0) -> float:
    """Sup of A_s(xi) / (e^{delta<eta>^.5} e^{delta<rho>^.5} (<eta>^s + <rho>^s)).

    The scalar splitting behind the product estimate; bounded by 2**s for
    s >= 0, delta >= 0.
    """
    rng = np.random.default_rng(seed)
    eta = 10.0 ** rng.uniform(-2.0, 4.0, n_samples) * rng.choice([-1, 1], n_samples)
    rho = 10.0 ** rng.uniform(-2.0, 4.0, n_samples) * rng.choice([-1, 1], n_samples)
    xi = eta + rho
    log_lhs = _log_A(xi, delta, s)
    br_e, br_r = bracket(eta), bracket(rho)
    log_sum = np.logaddexp(s * np.log(br_e), s * np.log(br_r))
    log_rhs = delta * np.sqrt(br_e) + delta * np.sqrt(br_r) + log_sum
    return float(np.exp(np.max(log_lhs - log_rhs)))


def check_product_law(f: SpectralField, g: SpectralField,
                      weight: GevreyWeight, t: float = 0.0,
                      mu: float = 1.0) -> dict:
    """Weighted norm of a product against the two-factor majorant.

    lhs = |fg| in the (radius, s) norm with p=2; rhs pairs the full-index
    norm of each factor with the low-index (mu) sup norm of the other.
    Returns lhs, rhs and their ratio, which stays O(1) over band-limited
    inputs.
    """
    prod = dealiased_product(f, g)
    low = replace(weight, s=mu)
    lhs = gevrey_norm(prod, weight, t, p=2)
    rhs = (gevrey_norm(f, weight, t, p=2) * gevrey_norm(g, low, t, p=np.inf)
           + gevrey_norm(g, weight, t, p=2) * gevrey_norm(f, low, t, p=np.inf))
    ratio = lhs / rhs if rhs > 0.0 else (0.0 if lhs == 0.0 else np.inf)
    return {"lhs": lhs, "rhs": rhs, "ratio": ratio}
