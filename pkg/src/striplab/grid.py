"""Discretization backbone for the periodic strip [0, Lx) x [0, 1].

Fourier collocation in x, second-order centered finite differences in y.
Fields are stored as complex coefficient arrays of shape (Nx, Ny + 2)
indexed by (mode slot, y node); the boundary nodes y = 0, 1 are carried
explicitly so boundary closures stay local.

Conventions that the rest of the package relies on:

* retained wavenumbers are k = (2*pi/Lx) * m with integer labels
  m in {-Nx/2 + 1, ..., Nx/2}; the Nyquist slot is labelled +Nx/2 so that
  applying ddx twice is exactly multiplication by -k^2, slot by slot;
* physical values at node x_i are sum_m c[m] * exp(i k_m x_i), i.e.
  coeffs = fft(phys, axis=0) / Nx;
* products use the 2/3 rule: slots with |m| > Nx/3 are zeroed before and
  after the pointwise multiply, so quadratic aliasing never reaches the
  kept band. Cubic terms are built from two successive dealiased products.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from functools import cached_property

import numpy as np

__all__ = [
    "BoundaryCondition",
    "Grid",
    "GridError",
    "SolveSingularError",
    "SpectralField",
    "make_grid",
    "from_physical",
    "to_physical",
    "mode_field",
    "reality_defect",
    "ddx",
    "ddy",
    "dealiased_product",
    "helmholtz_solve_mode",
    "solve_tridiag_batch",
    "trapz_y",
]

TAU = 2.0 * np.pi


class GridError(ValueError):
    """Invalid grid parameters."""


class SolveSingularError(RuntimeError):
    """A per-mode implicit solve hit a singular or near-singular operator."""

    def __init__(self, k, b, detail: str = ""):
        self.k = k
        self.b = b
        msg = f"singular per-mode solve at k={k}, b={b}"
        if detail:
            msg += f" ({detail})"
        super().__init__(msg)


class BoundaryCondition(Enum):
    DIRICHLET0 = "dirichlet0"
    NEUMANN0 = "neumann0"


@dataclass(frozen=True, eq=False)
class Grid:
    """Uniform tensor grid: Nx periodic x-points, Ny interior y-points.

    y nodes are y_j = j/(Ny+1) for j = 0..Ny+1, so dy = 1/(Ny+1) and the
    walls are nodes 0 and Ny+1.
    """

    Nx: int
    Ny: int
    Lx: float = TAU

    def __post_init__(self):
        if self.Nx % 2 != 0:
            raise GridError(f"Nx must be even, got {self.Nx}")
        if self.Nx < 8:
            raise GridError(f"Nx must be >= 8, got {self.Nx}")
        if self.Ny < 8:
            raise GridError(f"Ny must be >= 8, got {self.Ny}")
        if not self.Lx > 0:
            raise GridError(f"Lx must be positive, got {self.Lx}")

    @cached_property
    def k_index(self) -> np.ndarray:
        """Integer mode labels in FFT slot order, Nyquist labelled +Nx/2."""
        m = np.arange(self.Nx)
        return np.where(m <= self.Nx // 2, m, m - self.Nx)

    @cached_property
    def k(self) -> np.ndarray:
        """Scaled wavenumbers 2*pi/Lx * k_index."""
        return (TAU / self.Lx) * self.k_index

    @cached_property
    def dealias_keep(self) -> np.ndarray:
        """Boolean mask of slots kept by the 2/3 rule (|m| <= Nx/3)."""
        return np.abs(self.k_index) <= self.Nx / 3 + 1e-12

    @property
    def dy(self) -> float:
        return 1.0 / (self.Ny + 1)

    @cached_property
    def y(self) -> np.ndarray:
        return np.arange(self.Ny + 2) * self.dy

    @cached_property
    def x(self) -> np.ndarray:
        return np.arange(self.Nx) * (self.Lx / self.Nx)

    @property
    def dx(self) -> float:
        return self.Lx / self.Nx

    @property
    def shape(self) -> tuple:
        return (self.Nx, self.Ny + 2)


def make_grid(Nx: int, Ny: int, Lx: float = TAU) -> Grid:
    return Grid(int(Nx), int(Ny), float(Lx))


@dataclass(eq=False)
class SpectralField:
    """Coefficient array c[slot, node] on a Grid plus a reality marker.

    reality=True asserts conjugate symmetry c[-m] = conj(c[m]); the Nyquist
    slot, its own conjugate partner, must then be real.
    """

    grid: Grid
    coeffs: np.ndarray
    reality: bool = False

    def __post_init__(self):
        self.coeffs = np.asarray(self.coeffs, dtype=np.complex128)
        if self.coeffs.shape != self.grid.shape:
            raise GridError(
                f"coeff shape {self.coeffs.shape} does not match grid {self.grid.shape}"
            )

    def copy(self) -> "SpectralField":
        return SpectralField(self.grid, self.coeffs.copy(), self.reality)

    # Small arithmetic helpers keep the solvers readable. Linear field
    # algebra preserves reality; scalars must be real to claim it.
    def __add__(self, other: "SpectralField") -> "SpectralField":
        return SpectralField(self.grid, self.coeffs + other.coeffs,
                             self.reality and other.reality)

    def __sub__(self, other: "SpectralField") -> "SpectralField":
        return SpectralField(self.grid, self.coeffs - other.coeffs,
                             self.reality and other.reality)

    def __mul__(self, a: float) -> "SpectralField":
        keep = self.reality and not isinstance(a, complex)
        return SpectralField(self.grid, a * self.coeffs, keep)

    __rmul__ = __mul__

    def __neg__(self) -> "SpectralField":
        return SpectralField(self.grid, -self.coeffs, self.reality)


def zero_field(grid: Grid, reality: bool = True) -> SpectralField:
    return SpectralField(grid, np.zeros(grid.shape, dtype=np.complex128), reality)


def from_physical(grid: Grid, values: np.ndarray) -> SpectralField:
    values = np.asarray(values)
    if values.shape != grid.shape:
        raise GridError(f"physical shape {values.shape} != grid {grid.shape}")
    coeffs = np.fft.fft(values, axis=0) / grid.Nx
    return SpectralField(grid, coeffs, reality=bool(np.isrealobj(values)))


def to_physical(f: SpectralField) -> np.ndarray:
    phys = np.fft.ifft(f.coeffs * f.grid.Nx, axis=0)
    if f.reality:
        return phys.real
    return phys


def mode_field(grid: Grid, k_int: int, profile: np.ndarray,
               reality: bool = False) -> SpectralField:
    """Field with a single x-mode (plus its conjugate partner if reality)."""
    profile = np.asarray(profile, dtype=np.complex128)
    if profile.shape != (grid.Ny + 2,):
        raise GridError(f"profile length {profile.shape} != Ny+2 = {grid.Ny + 2}")
    slots = grid.k_index
    out = np.zeros(grid.shape, dtype=np.complex128)
    hit = np.nonzero(slots == k_int)[0]
    if hit.size != 1:
        raise GridError(f"mode {k_int} not retained on Nx={grid.Nx} grid")
    out[hit[0]] = profile
    if reality:
        if k_int == 0 or 2 * k_int == grid.Nx:
            out[hit[0]] = profile.real
        else:
            mirr = np.nonzero(slots == -k_int)[0][0]
            out[mirr] = np.conj(profile)
    return SpectralField(grid, out, reality=reality)


def reality_defect(f: SpectralField) -> float:
    """Max deviation from conjugate symmetry, relative to max |coeff|."""
    c = f.coeffs
    flipped = np.conj(c[(-np.arange(f.grid.Nx)) % f.grid.Nx])
    denom = max(np.max(np.abs(c)), 1e-300)
    return float(np.max(np.abs(c - flipped)) / denom)


# ---------------------------------------------------------------------------
# derivatives

def ddx(f: SpectralField) -> SpectralField:
    """Exact spectral x-derivative: multiply slot m by i*k_m."""
    out = f.coeffs * (1j * f.grid.k)[:, None]
    # With the +Nx/2 Nyquist label, ddx on a real field keeps the reality
    # flag only while the Nyquist slot is empty; every dealiased field
    # satisfies that.
    return SpectralField(f.grid, out, f.reality)


def ddy(f: SpectralField, bc: BoundaryCondition | None = None) -> SpectralField:
    """Second-order y-derivative: centered interior, one-sided walls.

    When the field's boundary condition is declared Neumann0 the wall rows
    are exactly zero by definition; otherwise second-order one-sided
    stencils extrapolate the wall derivative.
    """
    c = f.coeffs
    dy = f.grid.dy
    out = np.empty_like(c)
    out[:, 1:-1] = (c[:, 2:] - c[:, :-2]) / (2.0 * dy)
    if bc is BoundaryCondition.NEUMANN0:
        out[:, 0] = 0.0
        out[:, -1] = 0.0
    else:
        out[:, 0] = (-3.0 * c[:, 0] + 4.0 * c[:, 1] - c[:, 2]) / (2.0 * dy)
        out[:, -1] = (3.0 * c[:, -1] - 4.0 * c[:, -2] + c[:, -3]) / (2.0 * dy)
    return SpectralField(f.grid, out, f.reality)


def trapz_y(values: np.ndarray, dy: float, axis: int = -1) -> np.ndarray:
    """Trapezoid quadrature over the full node set including walls."""
    sl = [slice(None)] * values.ndim
    sl[axis] = slice(1, -1)
    inner = values[tuple(sl)].sum(axis=axis)
    sl[axis] = 0
    first = values[tuple(sl)]
    sl[axis] = -1
    last = values[tuple(sl)]
    return dy * (inner + 0.5 * (first + last))


# ---------------------------------------------------------------------------
# dealiased products

def dealias(f: SpectralField) -> SpectralField:
    out = f.coeffs.copy()
    out[~f.grid.dealias_keep] = 0.0
    return SpectralField(f.grid, out, f.reality)


def dealiased_product(f: SpectralField, g: SpectralField) -> SpectralField:
    """Pointwise product with the 2/3 rule applied before and after."""
    if f.grid is not g.grid and f.grid.shape != g.grid.shape:
        raise GridError("dealiased_product requires fields on one grid")
    grid = f.grid
    keep = grid.dealias_keep
    fc = np.where(keep[:, None], f.coeffs, 0.0)
    gc = np.where(keep[:, None], g.coeffs, 0.0)
    fp = np.fft.ifft(fc * grid.Nx, axis=0)
    gp = np.fft.ifft(gc * grid.Nx, axis=0)
    both_real = f.reality and g.reality
    if both_real:
        prod = fp.real * gp.real
    else:
        prod = fp * gp
    out = np.fft.fft(prod, axis=0) / grid.Nx
    out[~keep] = 0.0
    return SpectralField(grid, out, reality=both_real)


# ---------------------------------------------------------------------------
# tridiagonal machinery

_PIVOT_FLOOR = 1e-13


def solve_tridiag_batch(dl: np.ndarray, d: np.ndarray, du: np.ndarray,
                        rhs: np.ndarray, context=("?", "?")) -> np.ndarray:
    """Thomas solve of a batch of tridiagonal systems along the last axis.

    dl[..., i] multiplies x[..., i-1] in row i (dl[..., 0] ignored);
    du[..., i] multiplies x[..., i+1] (du[..., -1] ignored). No pivoting:
    the operators assembled in this package are diagonally dominant, and a
    collapsing pivot raises SolveSingularError rather than returning noise.
    """
    d = np.array(np.broadcast_arrays(d, rhs)[0], dtype=np.complex128, copy=True)
    x = np.array(rhs, dtype=np.complex128, copy=True)
    dl = np.broadcast_to(dl, d.shape)
    du = np.broadcast_to(du, d.shape)
    n = d.shape[-1]
    scale = np.max(np.abs(dl) + np.abs(d) + np.abs(du), axis=-1)
    scale = np.maximum(scale, 1e-300)
    for i in range(1, n):
        w = dl[..., i] / d[..., i - 1]
        d[..., i] = d[..., i] - w * du[..., i - 1]
        x[..., i] = x[..., i] - w * x[..., i - 1]
    if np.any(np.abs(d) <= _PIVOT_FLOOR * scale[..., None]):
        raise SolveSingularError(*context, detail="pivot below threshold")
    x[..., -1] = x[..., -1] / d[..., -1]
    for i in range(n - 2, -1, -1):
        x[..., i] = (x[..., i] - du[..., i] * x[..., i + 1]) / d[..., i]
    return x


def _helmholtz_rows(a: float, b, q, n_nodes: int, dy: float,
                    bc: BoundaryCondition):
    """Tridiagonal rows of (a d_yy - b - q(y)) with the requested closure.

    Dirichlet0 eliminates the wall unknowns (system size Ny);
    Neumann0 keeps them, closing with the second-order ghost point
    u_{-1} = u_1 (and mirrored at the top), so the system size is Ny + 2.
    """
    inv = a / dy**2
    q = np.asarray(q) if np.ndim(q) else np.full(n_nodes, q, dtype=np.complex128)
    if bc is BoundaryCondition.DIRICHLET0:
        n = n_nodes - 2
        d = -2.0 * inv - b - q[1:-1]
        dl = np.full(n, inv, dtype=np.complex128)
        du = np.full(n, inv, dtype=np.complex128)
        return dl, np.asarray(d, dtype=np.complex128), du
    # Neumann0
    n = n_nodes
    d = np.empty(n, dtype=np.complex128)
    dl = np.full(n, inv, dtype=np.complex128)
    du = np.full(n, inv, dtype=np.complex128)
    d[:] = -2.0 * inv - b - q
    du[0] = 2.0 * inv
    dl[-1] = 2.0 * inv
    return dl, d, du


def helmholtz_solve_mode(k, a: float, b, q, rhs: np.ndarray,
                         bc: BoundaryCondition) -> np.ndarray:
    """Solve (a d_yy - b - q(y)) u = rhs on the full node set.

    rhs has length Ny + 2 (walls included; Dirichlet wall entries are
    ignored as data and returned as zeros). The residual of the returned
    profile is checked against 1e-10 * (|rhs| + |u| * |op|); failure or a
    collapsing pivot raises SolveSingularError naming (k, b).
    """
    rhs = np.asarray(rhs, dtype=np.complex128)
    n_nodes = rhs.shape[0]
    if n_nodes < 10:
        raise GridError("profile must carry at least 10 nodes")
    dy = 1.0 / (n_nodes - 1)
    dl, d, du = _helmholtz_rows(a, b, q, n_nodes, dy, bc)
    if bc is BoundaryCondition.DIRICHLET0:
        inner = solve_tridiag_batch(dl, d, du, rhs[1:-1], context=(k, b))
        out = np.zeros(n_nodes, dtype=np.complex128)
        out[1:-1] = inner
    else:
        out = solve_tridiag_batch(dl, d, du, rhs, context=(k, b))

    # residual certificate
    res = _apply_tridiag(dl, d, du, out if bc is BoundaryCondition.NEUMANN0 else out[1:-1])
    target = rhs if bc is BoundaryCondition.NEUMANN0 else rhs[1:-1]
    opnorm = float(np.max(np.abs(dl) + np.abs(d) + np.abs(du)))
    tol = 1e-10 * (np.linalg.norm(target) + np.linalg.norm(out) * opnorm)
    if np.linalg.norm(res - target) > max(tol, 1e-300):
        raise SolveSingularError(k, b, detail="residual check failed")
    return out


def _apply_tridiag(dl, d, du, x):
    y = d * x
    y[1:] += dl[1:] * x[:-1]
    y[:-1] += du[:-1] * x[1:]
    return y
