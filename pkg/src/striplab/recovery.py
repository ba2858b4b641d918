"""Constraint solves: div-free reconstruction, vertical velocity, pressure.

Everything here revolves around one discrete fact: the y-derivative used
by the rest of the code is the full matrix D (centered interior rows plus
one-sided wall rows), so any solve whose answer is later differentiated
with D must be posed with the composite product D@D, not with the 3-point
second-difference stencil. Composite solves are pentadiagonal; they are
LU-factored once per grid (and per eps for the weighted projection) and
reused.

The k = 0 column never goes through a Poisson solve. Its constraints are
first-order and are inverted exactly by a two-chain recursion that honors
the bottom one-sided row; the top one-sided row is the single
over-determined compatibility condition and its residual is surfaced, not
hidden.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.integrate import cumulative_trapezoid
from scipy.linalg import lu_factor, lu_solve

from .grid import (
    Grid,
    SolveSingularError,
    SpectralField,
    ddx,
    ddy,
    dealiased_product,
    trapz_y,
)

__all__ = [
    "DivFreePair",
    "curl",
    "discrete_antiderivative",
    "divergence",
    "hydrostatic_pressure",
    "interior_divergence_residual",
    "pressure_projection_eps",
    "recover_div_free_from_curl",
    "top_wall_residual",
    "v_from_u",
]


@dataclass(eq=False)
class DivFreePair:
    """Divergence-free pair derived from a scalar potential.

    first plays the horizontal role (Neumann-type trace), second the
    vertical role and vanishes on both walls; first = ddy(potential) and
    second = -ddx(potential), so the pair is divergence-free for the
    discrete operators themselves, not merely to truncation error.
    """

    first: SpectralField
    second: SpectralField
    potential: SpectralField


def divergence(a: SpectralField, b: SpectralField) -> SpectralField:
    return ddx(a) + ddy(b)


def curl(a: SpectralField, b: SpectralField) -> SpectralField:
    return ddy(a) - ddx(b)


def interior_divergence_residual(a: SpectralField, b: SpectralField) -> float:
    """Max |div| over interior nodes, relative to the pair's coefficient scale.

    Wall rows use one-sided derivative rows that act as extrapolation
    diagnostics, so the constraint is enforced and measured on interior
    nodes only.
    """
    d = divergence(a, b).coeffs[:, 1:-1]
    scale = max(np.max(np.abs(a.coeffs)), np.max(np.abs(b.coeffs)), 1e-300)
    return float(np.max(np.abs(d)) / scale)


def top_wall_residual(v: SpectralField) -> float:
    """Largest |v| on the top wall; v_from_u can only pin the bottom one."""
    return float(np.max(np.abs(v.coeffs[:, -1])))


def discrete_antiderivative(rhs: np.ndarray, dy: float) -> np.ndarray:
    """Invert the discrete d/dy against all rows except the top one-sided row.

    Returns p with p[..., 0] = 0, the centered rows
    (p[j+1] - p[j-1])/(2 dy) = rhs[j] holding exactly for every interior j,
    and the bottom one-sided row (-3 p0 + 4 p1 - p2)/(2 dy) = rhs[0] holding
    exactly. That is n-1 equations plus the anchor for n unknowns; the top
    row is over-determined and is left to the caller as a residual.
    """
    rhs = np.asarray(rhs)
    p = np.zeros_like(rhs)
    n = rhs.shape[-1]
    for j in range(1, n - 1):
        p[..., j + 1] = p[..., j - 1] + 2.0 * dy * rhs[..., j]
    # odd chain offset from the bottom one-sided row
    p1 = (2.0 * dy * rhs[..., 0] + 3.0 * p[..., 0] + p[..., 2]) / 4.0
    p[..., 1::2] += p1[..., None]
    return p


@lru_cache(maxsize=64)
def _dy_dense(grid: Grid) -> np.ndarray:
    """The full y-derivative matrix, identical to what ddy applies."""
    n = grid.Ny + 2
    h = 2.0 * grid.dy
    D = np.zeros((n, n))
    for j in range(1, n - 1):
        D[j, j - 1] = -1.0 / h
        D[j, j + 1] = 1.0 / h
    D[0, 0], D[0, 1], D[0, 2] = -3.0 / h, 4.0 / h, -1.0 / h
    D[-1, -1], D[-1, -2], D[-1, -3] = 3.0 / h, -4.0 / h, 1.0 / h
    return D


@lru_cache(maxsize=64)
def _dydy_dense(grid: Grid) -> np.ndarray:
    D = _dy_dense(grid)
    return D @ D


def _factor_checked(M: np.ndarray, k: float, what: str):
    lu, piv = lu_factor(M)
    d = np.abs(np.diag(lu))
    if np.min(d) <= 1e-12 * max(np.max(d), 1.0):
        raise SolveSingularError(k, 0.0, detail=what)
    return M, (lu, piv)


def _lu_solve_c(lu_piv, b: np.ndarray) -> np.ndarray:
    # factors are real; complex rhs split to stay exact
    if np.iscomplexobj(b):
        return lu_solve(lu_piv, b.real) + 1j * lu_solve(lu_piv, b.imag)
    return lu_solve(lu_piv, b)


def _solve_refined(factor, b: np.ndarray) -> np.ndarray:
    """LU solve plus one iterative-refinement sweep.

    The weighted pressure matrices reach condition numbers eps^-2/dy^2;
    one refinement step keeps the equation residual at round-off so the
    projected divergence stays far below the 1e-9 gate.
    """
    M, lu_piv = factor
    x = _lu_solve_c(lu_piv, b)
    r = b - M @ x
    return x + _lu_solve_c(lu_piv, r)


@lru_cache(maxsize=64)
def _recovery_factors(grid: Grid) -> dict:
    """LU of (D@D - k^2) with potential-Dirichlet wall rows, per k != 0."""
    DD = _dydy_dense(grid)
    n = grid.Ny + 2
    out = {}
    for slot, k in enumerate(grid.k):
        if k == 0.0:
            continue
        M = DD - k * k * np.eye(n)
        M[0, :] = 0.0
        M[0, 0] = 1.0
        M[-1, :] = 0.0
        M[-1, -1] = 1.0
        out[slot] = _factor_checked(M, k, "curl recovery")
    return out


@lru_cache(maxsize=64)
def _projection_factors(grid: Grid, eps: float) -> dict:
    """LU of (eps^-2 D@D - k^2) with one-sided Neumann wall rows, per k != 0."""
    DD = _dydy_dense(grid)
    D = _dy_dense(grid)
    n = grid.Ny + 2
    out = {}
    for slot, k in enumerate(grid.k):
        if k == 0.0:
            continue
        M = DD / eps**2 - k * k * np.eye(n)
        M[0, :] = D[0, :]
        M[-1, :] = D[-1, :]
        out[slot] = _factor_checked(M, k, "weighted pressure solve")
    return out


def _k0_slot(grid: Grid) -> int:
    return int(np.nonzero(grid.k_index == 0)[0][0])


def recover_div_free_from_curl(omega: SpectralField) -> DivFreePair:
    """Build the pair (ddy F, -ddx F) whose discrete curl equals omega.

    Per mode k != 0 the potential solves (D@D - k^2) F = omega with F = 0
    on both walls, so the returned curl matches omega exactly on interior
    rows. The k = 0 column integrates omega directly (zero-mean gauge) and
    its potential is anchored at F(0) = 0.
    """
    g = omega.grid
    F = np.zeros_like(omega.coeffs)
    factors = _recovery_factors(g)
    for slot, factor in factors.items():
        col = omega.coeffs[slot]
        if not np.any(col):
            continue
        rhs = col.copy()
        rhs[0] = 0.0
        rhs[-1] = 0.0
        F[slot] = _solve_refined(factor, rhs)
        # Dirichlet rows up to pivoting round-off; pin them bitwise
        F[slot, 0] = 0.0
        F[slot, -1] = 0.0

    s0 = _k0_slot(g)
    phi0 = discrete_antiderivative(omega.coeffs[s0], g.dy)
    phi0 = phi0 - trapz_y(phi0, g.dy)
    F[s0] = discrete_antiderivative(phi0, g.dy)

    potential = SpectralField(g, F, reality=omega.reality)
    first = ddy(potential)
    first.coeffs[s0] = phi0
    second = -ddx(potential)
    return DivFreePair(first=first, second=second, potential=potential)


def v_from_u(u: SpectralField, variant: str = "trapezoid") -> SpectralField:
    """Vertical velocity -dx of the running y-integral of u.

    "trapezoid" follows the quadrature convention used everywhere else and
    is second-order accurate; "exact_discrete" inverts the discrete
    derivative instead, so the interior divergence of (u, v) vanishes to
    round-off (used inside the hydrostatic stepper to hold its tight
    divergence gate). Both give v(., 0) = 0 exactly. The top wall value is
    the flux defect -ik * integral of u; it is returned as-is, never
    zeroed (see top_wall_residual).
    """
    g = u.grid
    ik = 1j * g.k
    if variant == "trapezoid":
        integ = cumulative_trapezoid(u.coeffs, dx=g.dy, axis=1, initial=0.0)
        vc = -ik[:, None] * integ
    elif variant == "exact_discrete":
        vc = discrete_antiderivative(-ik[:, None] * u.coeffs, g.dy)
    else:
        raise ValueError(f"unknown variant {variant!r}")
    return SpectralField(g, vc, reality=u.reality)


def pressure_projection_eps(ru: SpectralField, rv: SpectralField, eps: float):
    """Remove the pressure gradient from anisotropically weighted tendencies.

    Inputs: ru is the horizontal momentum tendency (everything except
    -dx p), rv is the eps^2-weighted vertical momentum tendency (the RHS
    once eps^2 dt v + dy p is moved to the left). Per mode k != 0 the
    pressure solves

        (eps^-2 D@D - k^2) p = ik ru + eps^-2 D rv,   D p = rv at the walls,

    and at k = 0 it is the zero-mean discrete antiderivative of rv. Returns
    (p, du, dv) with du = ru - ddx p and dv = eps^-2 (rv - ddy p), the
    corrected velocity tendencies: dx du + dy dv = 0 exactly on interior
    rows, and dv keeps zero walls whenever rv does (the wall rows force the
    one-sided derivative of p to match rv there).
    """
    if not 0.0 < eps <= 1.0:
        raise ValueError("eps must lie in (0, 1]")
    g = ru.grid
    eps = float(eps)
    factors = _projection_factors(g, eps)
    dyrv = ddy(rv)
    rhs_all = (1j * g.k)[:, None] * ru.coeffs + dyrv.coeffs / eps**2
    pc = np.zeros_like(ru.coeffs)
    for slot, factor in factors.items():
        b = rhs_all[slot].copy()
        b[0] = rv.coeffs[slot, 0]
        b[-1] = rv.coeffs[slot, -1]
        if not (np.any(b) or np.any(ru.coeffs[slot]) or np.any(rv.coeffs[slot])):
            continue
        pc[slot] = _solve_refined(factor, b)

    s0 = _k0_slot(g)
    p0 = discrete_antiderivative(rv.coeffs[s0], g.dy)
    pc[s0] = p0 - trapz_y(p0, g.dy)

    real = ru.reality and rv.reality
    p = SpectralField(g, pc, reality=real)
    du = ru - ddx(p)
    dvc = (rv.coeffs - ddy(p).coeffs) / eps**2
    # wall nodes are boundary-condition rows, not momentum rows: for k != 0
    # the wall rows of the solve zero them already; the k = 0 top node would
    # otherwise carry the Neumann compatibility defect into the divergence
    # of the neighboring interior row
    dvc[s0, -1] = 0.0
    dv = SpectralField(g, dvc, reality=real)
    return p, du, dv


def hydrostatic_pressure(e: SpectralField, f: SpectralField, v: SpectralField,
                         h: SpectralField, alpha: float,
                         u_tendency: SpectralField = None) -> SpectralField:
    """Pressure of the hydrostatic system: vertical balance plus a surface part.

    The y-profile integrates -alpha (e + e h + v + 2 v h + v h^2) from the
    bottom wall (products dealiased, trapezoid quadrature). The surface
    part p_s(k) is fixed, for k != 0, so that the y-averaged horizontal
    tendency vanishes, i.e. d/dt of the per-mode flux of u is zero; this
    requires the pressure-free horizontal tendency u_tendency. Without it
    p_s = 0 and only the vertical balance part is returned. p_s(0) = 0
    always. f does not enter the vertical balance; it is accepted so the
    call site can pass the full field set.
    """
    g = e.grid
    eh = dealiased_product(e, h)
    vh = dealiased_product(v, h)
    vh2 = dealiased_product(vh, h)
    integrand = (e + eh + v + 2.0 * vh + vh2) * (-alpha)
    q = cumulative_trapezoid(integrand.coeffs, dx=g.dy, axis=1, initial=0.0)
    if u_tendency is not None:
        k = g.k
        t_q = trapz_y(q, g.dy, axis=-1)
        t_r = trapz_y(u_tendency.coeffs, g.dy, axis=-1)
        ps = np.zeros_like(t_r)
        nz = k != 0.0
        ps[nz] = t_r[nz] / (1j * k[nz]) - t_q[nz]
        q = q + ps[:, None]
    real = e.reality and v.reality and h.reality and (
        u_tendency is None or u_tendency.reality)
    return SpectralField(g, q, reality=real)
