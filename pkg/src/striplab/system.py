"""State, tendencies, and time stepping for the anisotropic strip system.

Prognostic fields are (u, v, h, ht); the divergence-free pair (e, f) is
diagnostic, recovered from ht every step, and the pressure comes from the
weighted projection.  The stepper is second-order IMEX: Crank-Nicolson on
every per-mode linear operator that is stiff (y-diffusion, eps^2 dxx, the
wave damping, the linear alpha-damping of u and v) and two-step
Adams-Bashforth on advection and every product coupling, with a plain IMEX
Euler first step.  The linear runner evolves the decoupled heat and damped
wave problems with pure Crank-Nicolson, whose discrete energies are then
monotone up to roundoff.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Callable, Optional

import numpy as np

from .config import RunConfig
from .gevrey import GevreyWeight, LambdaSchedule, gevrey_multiplier, gevrey_norm
from .grid import (
    Grid,
    SpectralField,
    ddx,
    ddy,
    dealiased_product,
    make_grid,
    solve_tridiag_batch,
    to_physical,
    zero_field,
)
from .recovery import (
    curl,
    discrete_antiderivative,
    interior_divergence_residual,
    pressure_projection_eps,
    recover_div_free_from_curl,
    v_from_u,
)

__all__ = [
    "PhysicalParams",
    "NSMState",
    "InitialDataSpec",
    "CFLError",
    "init_data_gevrey",
    "rhs_full",
    "rhs_linear",
    "step_imex",
    "run_linear",
    "run_full",
    "state_metrics",
    "mirror_defect",
    "LinearRunResult",
    "RunResult",
]

# Damping margin 0.95 * pi/10 used when a gwp schedule has no explicit
# theta; the pi is the smallest Dirichlet y-frequency (validated
# numerically in diagnostics.poincare_theta).
_AUTO_THETA = 0.95 * math.pi / 10.0

_BLOWUP_NORM = 1e12


class CFLError(RuntimeError):
    """Requested dt violates the advective step-size bound."""


@dataclass(frozen=True)
class PhysicalParams:
    """Scaling group of the thin-strip system.

    alpha defaults to mu * eps**2; beta and gamma follow from (mu, mu0,
    alpha).  normalized=True pins alpha = beta = gamma = 1 regardless,
    the convention of the decay runs.  m is recorded for reference only.
    """

    eps: float = 1.0
    mu: float = 1.0
    mu0: float = 1.0
    alpha: Optional[float] = None
    normalized: bool = False

    def __post_init__(self):
        if not 0.0 < self.eps <= 1.0:
            raise ValueError("eps must lie in (0, 1]")
        if self.mu <= 0.0 or self.mu0 <= 0.0:
            raise ValueError("mu and mu0 must be positive")
        if self.normalized:
            object.__setattr__(self, "alpha", 1.0)
        elif self.alpha is None:
            object.__setattr__(self, "alpha", self.mu * self.eps**2)
        elif self.alpha <= 0.0:
            raise ValueError("alpha must be positive")

    @property
    def beta(self) -> float:
        if self.normalized:
            return 1.0
        return 1.0 / (self.mu**2 * self.mu0 * self.alpha)

    @property
    def gamma(self) -> float:
        if self.normalized:
            return 1.0
        return 1.0 / (self.mu0 * self.alpha)

    @property
    def m(self) -> float:
        return 1.0 / self.eps


@dataclass(frozen=True, eq=False)
class NSMState:
    """Full solver state at one time level.

    tendencies holds the instantaneous, divergence-consistent time
    derivatives of the last accepted step (used by the energy
    diagnostics); explicit_now / explicit_prev are the stored explicit
    tendencies feeding the two-step Adams-Bashforth combination.
    """

    t: float
    u: SpectralField
    v: SpectralField
    h: SpectralField
    ht: SpectralField
    e: SpectralField
    f: SpectralField
    p: SpectralField
    params: PhysicalParams
    grid: Grid
    tendencies: Optional[dict] = None
    explicit_now: Optional[tuple] = None
    explicit_prev: Optional[tuple] = None


@dataclass(frozen=True)
class InitialDataSpec:
    """Seeded Gevrey-class initial data.

    kappa, when set, rescales the whole state so the combined norm
    ||dy(u, e, f, h)|| at (delta0, s + 1/2) equals kappa exactly.
    """

    amplitude: float = 0.01
    delta0: float = 1.0
    s: float = 10.0
    seed: int = 0
    profile: str = "sine"
    kappa: Optional[float] = None

    def __post_init__(self):
        if self.amplitude < 0.0:
            raise ValueError("amplitude must be >= 0")
        if self.delta0 <= 0.0:
            raise ValueError("delta0 must be positive")
        if self.s < 0.0:
            raise ValueError("s must be >= 0")
        if self.profile != "sine":
            raise ValueError("only the 'sine' profile family is implemented")
        if self.kappa is not None and self.kappa <= 0.0:
            raise ValueError("kappa must be positive when set")


def _wall_zero(c: np.ndarray) -> np.ndarray:
    c[:, 0] = 0.0
    c[:, -1] = 0.0
    return c


def _sin_profile(y: np.ndarray, m: int) -> np.ndarray:
    prof = np.sin(m * np.pi * y)
    prof[0] = 0.0
    prof[-1] = 0.0
    return prof


def init_data_gevrey(spec: InitialDataSpec, grid: Grid,
                     params: Optional[PhysicalParams] = None) -> NSMState:
    """Build a state from seeded, band-limited, Gevrey-decaying data.

    Per kept mode k: u gets amplitude * exp(-delta0 <k>^(1/2)) times a
    unit-modulus seeded phase and a zero-flux sine combination; h and the
    seed vorticity omega get wall-vanishing sine profiles.  (e, f) is the
    divergence-free pair with curl omega, ht := omega, v is the exact
    discrete reconstruction from u, so every state invariant holds at t=0.
    """
    params = PhysicalParams() if params is None else params
    rng = np.random.default_rng(spec.seed)
    y = grid.y
    s = {m: _sin_profile(y, m) for m in (1, 2, 3, 4, 6, 8)}

    # Even sines integrate to zero under the trapezoid rule exactly, but the
    # chain quadrature (the one the exact-discrete v reconstruction and the
    # surface-pressure flux closure both use) leaves an O(dy^2) remainder.
    # Remove it with a sin(8 pi y) component so the reconstructed v vanishes
    # at both walls bitwise; the corrector coefficient is O(0.3) at most.
    def chain_flux(prof: np.ndarray) -> np.ndarray:
        return discrete_antiderivative(prof, grid.dy)[..., -1]

    phi8 = float(chain_flux(s[8]))

    def zero_chain_flux(g: np.ndarray) -> np.ndarray:
        return g - (chain_flux(g) / phi8) * s[8]

    kidx = grid.k_index
    keep = grid.dealias_keep
    kpos = np.array([kk for kk in range(1, grid.Nx // 2 + 1)
                     if keep[np.nonzero(kidx == kk)[0][0]]])
    slot_of = {int(kidx[i]): i for i in range(grid.Nx)}

    shape = (grid.Nx, grid.Ny + 2)
    uc = np.zeros(shape, dtype=np.complex128)
    hc = np.zeros(shape, dtype=np.complex128)
    wc = np.zeros(shape, dtype=np.complex128)

    # one draw block per positive mode, in a fixed documented order:
    # columns = (phase_u, a_u, b_u, phase_h, a_h, phase_w, a_w)
    draws = rng.uniform(0.0, 1.0, size=(len(kpos), 7))
    k0 = rng.uniform(0.0, 1.0, size=4)
    k0_signs = rng.integers(0, 2, size=3) * 2 - 1

    def decay(kk: int) -> float:
        return spec.amplitude * math.exp(-spec.delta0 * math.sqrt(math.hypot(1.0, kk)))

    for row, kk in enumerate(kpos):
        ph_u, a_u, b_u, ph_h, a_h, ph_w, a_w = draws[row]
        r_u = np.exp(2j * np.pi * ph_u)
        r_h = np.exp(2j * np.pi * ph_h)
        r_w = np.exp(2j * np.pi * ph_w)
        g_u = zero_chain_flux(s[2] + (a_u - 0.5) * s[4] + (b_u - 0.5) * s[6])
        g_h = s[1] + (a_h - 0.5) * s[2]
        g_w = s[1] + (a_w - 0.5) * s[2]
        amp = decay(int(kk))
        sp, sm = slot_of[int(kk)], slot_of[-int(kk)]
        uc[sp] = amp * r_u * g_u
        hc[sp] = amp * r_h * g_h
        wc[sp] = amp * r_w * g_w
        uc[sm] = np.conj(uc[sp])
        hc[sm] = np.conj(hc[sp])
        wc[sm] = np.conj(wc[sp])

    s0 = slot_of[0]
    amp0 = decay(0)
    uc[s0] = amp0 * k0_signs[0] * (s[2] + (k0[0] - 0.5) * s[4] + (k0[1] - 0.5) * s[6])
    hc[s0] = amp0 * k0_signs[1] * (s[1] + (k0[2] - 0.5) * s[2])
    wc[s0] = amp0 * k0_signs[2] * (s[1] + (k0[3] - 0.5) * s[2])

    u = SpectralField(grid, uc, reality=True)
    h = SpectralField(grid, hc, reality=True)
    ht = SpectralField(grid, wc, reality=True)
    pair = recover_div_free_from_curl(ht)
    e, f = pair.first, pair.second
    v = v_from_u(u, variant="exact_discrete")

    if spec.kappa is not None:
        w_in = GevreyWeight(spec.delta0, spec.s + 0.5, None)
        total = math.fsum(
            gevrey_norm(ddy(x), w_in) ** 2 for x in (u, e, f, h))
        if total > 0.0:
            scale = spec.kappa / math.sqrt(total)
            for fld in (u, v, h, ht, e, f):
                fld.coeffs *= scale

    state = NSMState(
        t=0.0, u=u, v=v, h=h, ht=ht, e=e, f=f,
        p=zero_field(grid), params=params, grid=grid)
    ex = _explicit_parts(state.u, state.v, state.h, state.e, state.f, params)
    tend, p0 = _instantaneous(state, ex)
    return replace(state, p=p0, tendencies=tend, explicit_now=ex)


# ---------------------------------------------------------------------------
# tendencies

def _explicit_parts(u: SpectralField, v: SpectralField, h: SpectralField,
                    e: SpectralField, f: SpectralField,
                    par: PhysicalParams) -> tuple:
    """Adams-Bashforth half of the split: advection plus coupling products.

    The linear dampings -alpha u and -(alpha/eps^2) v are NOT here (they
    are folded into the implicit per-mode solves); the cross couplings
    alpha f and -(alpha/eps^2) e stay explicit since (e, f) is diagnostic.
    """
    al = par.alpha
    ieps2 = 1.0 / par.eps**2
    adv_u = dealiased_product(u, ddx(u)) + dealiased_product(v, ddy(u))
    adv_v = dealiased_product(u, ddx(v)) + dealiased_product(v, ddy(v))
    adv_h = dealiased_product(u, ddx(h)) + dealiased_product(v, ddy(h))
    uh = dealiased_product(u, h)
    uh2 = dealiased_product(uh, h)
    vh = dealiased_product(v, h)
    vh2 = dealiased_product(vh, h)
    fh = dealiased_product(f, h)
    eh = dealiased_product(e, h)
    ex_u = -adv_u + (f + fh + uh * (-2.0) + uh2 * (-1.0)) * al
    ex_v = -adv_v + (e + eh + vh * 2.0 + vh2) * (-al * ieps2)
    ex_ht = adv_h * (-1.0 / par.beta)
    return (ex_u, ex_v, ex_ht)


def rhs_full(state: NSMState) -> tuple:
    """Non-pressure, non-stiff tendencies (du, dv, dh, dht).

    du and dv carry advection and the complete alpha-coupling including
    the linear dampings; diffusion, pressure, and the wave's damping and
    gamma-diffusion belong to the implicit half and are not included.
    """
    par = state.params
    ex_u, ex_v, ex_ht = _explicit_parts(
        state.u, state.v, state.h, state.e, state.f, par)
    du = ex_u + state.u * (-par.alpha)
    dv = ex_v + state.v * (-par.alpha / par.eps**2)
    dh = state.ht.copy()
    return (du, dv, dh, ex_ht)


def rhs_linear(state: NSMState) -> tuple:
    """Linearization of rhs_full about the zero state (for Richardson tests)."""
    par = state.params
    du = (state.f - state.u) * par.alpha
    dv = (state.e + state.v) * (-par.alpha / par.eps**2)
    dh = state.ht.copy()
    dht = zero_field(state.grid, reality=state.ht.reality)
    return (du, dv, dh, dht)


# ---------------------------------------------------------------------------
# per-mode implicit solves (batched tridiagonal, Dirichlet walls)

def _lap_eps(c: np.ndarray, k: np.ndarray, eps: float, dy: float,
             onesided_walls: bool = False) -> np.ndarray:
    """(eps^2 dxx + dyy) c: exact in x, 3-point in y, zero or one-sided walls."""
    out = np.zeros_like(c)
    out[:, 1:-1] = (c[:, 2:] - 2.0 * c[:, 1:-1] + c[:, :-2]) / dy**2
    if onesided_walls:
        out[:, 0] = (2.0 * c[:, 0] - 5.0 * c[:, 1] + 4.0 * c[:, 2] - c[:, 3]) / dy**2
        out[:, -1] = (2.0 * c[:, -1] - 5.0 * c[:, -2] + 4.0 * c[:, -3] - c[:, -4]) / dy**2
    out -= (eps**2 * k**2)[:, None] * c
    return out


def _cn_forward(c: np.ndarray, bk: np.ndarray, dt: float, dy: float) -> np.ndarray:
    """(I + (dt/2)(L - bk)) c on interior rows, L the 3-point Dirichlet stencil."""
    out = np.zeros_like(c)
    lap = (c[:, 2:] - 2.0 * c[:, 1:-1] + c[:, :-2]) / dy**2
    out[:, 1:-1] = c[:, 1:-1] + 0.5 * dt * (lap - bk[:, None] * c[:, 1:-1])
    return out


def _cn_solve(grid: Grid, bk: np.ndarray, dt: float,
              rhs: np.ndarray) -> np.ndarray:
    """Solve (I - (dt/2)(L - bk)) x = rhs on interior rows; walls pinned to 0."""
    dy = grid.dy
    ny = grid.Ny
    diag = (1.0 + 0.5 * dt * bk)[:, None] + np.full(ny, dt / dy**2)
    off = np.full(ny, -0.5 * dt / dy**2)
    x = solve_tridiag_batch(off, diag, off, rhs[:, 1:-1], context=("cn", "batch"))
    out = np.zeros_like(rhs)
    out[:, 1:-1] = x
    return out


def _wave_solve(grid: Grid, eps: float, dt: float, beta: float, gamma: float,
                rhs: np.ndarray) -> np.ndarray:
    """Schur-complement solve of the trapezoidal (h, ht) update for ht."""
    dy = grid.dy
    c2 = dt * dt * gamma / (4.0 * beta)
    diag = (1.0 + dt / (2.0 * beta) + c2 * eps**2 * grid.k**2)[:, None] \
        + np.full(grid.Ny, 2.0 * c2 / dy**2)
    off = np.full(grid.Ny, -c2 / dy**2)
    x = solve_tridiag_batch(off, diag, off, rhs[:, 1:-1], context=("wave", "batch"))
    out = np.zeros_like(rhs)
    out[:, 1:-1] = x
    return out


def _instantaneous(state_like, ex: tuple) -> tuple:
    """Divergence-consistent instantaneous tendencies and pressure.

    Assembles the full right-hand sides (explicit parts + linear damping +
    diffusion), projects them, and returns ({'du','dv','dh','dht'}, p).
    """
    g = state_like.grid
    par = state_like.params
    eps, al, beta, gamma = par.eps, par.alpha, par.beta, par.gamma
    k, dy = g.k, g.dy
    ex_u, ex_v, ex_ht = ex
    fu = ex_u.coeffs + _lap_eps(state_like.u.coeffs, k, eps, dy) \
        - al * state_like.u.coeffs
    fv = ex_v.coeffs + _lap_eps(state_like.v.coeffs, k, eps, dy,
                                onesided_walls=True) \
        - (al / eps**2) * state_like.v.coeffs
    real = state_like.u.reality and state_like.v.reality
    ru = SpectralField(g, _wall_zero(fu), reality=real)
    rv = SpectralField(g, eps**2 * fv, reality=real)
    p, du, dv = pressure_projection_eps(ru, rv, eps)
    _wall_zero(du.coeffs)
    _wall_zero(dv.coeffs)
    dht_c = ex_ht.coeffs + (gamma * _lap_eps(state_like.h.coeffs, k, eps, dy)
                            - state_like.ht.coeffs) / beta
    dht = SpectralField(g, _wall_zero(dht_c), reality=state_like.ht.reality)
    tend = {"du": du, "dv": dv, "dh": state_like.ht.copy(), "dht": dht}
    return tend, p


def _cfl_limit(state: NSMState) -> float:
    g = state.grid
    umax = float(np.max(np.abs(to_physical(state.u))))
    vmax = float(np.max(np.abs(to_physical(state.v))))
    lim = math.inf
    if umax > 0.0:
        lim = min(lim, g.dx / umax)
    if vmax > 0.0:
        lim = min(lim, g.dy / vmax)
    return 0.4 * lim


def step_imex(state: NSMState, dt: float) -> NSMState:
    """One CN/AB2 step; first call after init falls back to IMEX Euler.

    Order of business: explicit combination, per-mode CN solves for the
    tentative (u*, v*), trapezoidal Schur update of (h, ht), weighted
    projection of the tentative velocities, diagnostic refresh of (e, f)
    from the new ht, then storage of instantaneous tendencies.

    The pressure is carried incrementally: the predictor subtracts the
    accumulated gradient dt grad p^n, and the projection's potential phi
    updates it as p^{n+1} = p^n + phi/dt.  Lagging the instantaneous
    pressure instead (re-solved from the assembled tendency) is unstable:
    its gradient feeds the wall rows' second differences back explicitly,
    and the one-step map grows a real-negative wall-layer eigenvalue once
    dt exceeds about 0.6 dy^2/nu_eff, independent of k and eps.
    """
    if dt <= 0.0:
        raise ValueError("dt must be positive")
    lim = _cfl_limit(state)
    if dt > lim:
        raise CFLError(f"dt={dt:g} exceeds the advective bound {lim:g}")

    g = state.grid
    par = state.params
    eps, al, beta, gamma = par.eps, par.alpha, par.beta, par.gamma
    k, dy = g.k, g.dy

    ex_now = state.explicit_now
    if ex_now is None:
        ex_now = _explicit_parts(state.u, state.v, state.h, state.e, state.f, par)
    if state.explicit_prev is None:
        ab = tuple(x.coeffs for x in ex_now)
    else:
        ab = tuple(1.5 * a.coeffs - 0.5 * b.coeffs
                   for a, b in zip(ex_now, state.explicit_prev))

    px = (1j * k)[:, None] * state.p.coeffs
    py = ddy(state.p).coeffs

    bu = eps**2 * k**2 + al
    rhs_u = _cn_forward(state.u.coeffs, bu, dt, dy)
    rhs_u[:, 1:-1] += dt * (ab[0][:, 1:-1] - px[:, 1:-1])
    ustar = _cn_solve(g, bu, dt, rhs_u)

    bv = eps**2 * k**2 + al / eps**2
    rhs_v = _cn_forward(state.v.coeffs, bv, dt, dy)
    rhs_v[:, 1:-1] += dt * (ab[1][:, 1:-1] - py[:, 1:-1] / eps**2)
    vstar = _cn_solve(g, bv, dt, rhs_v)

    hn, htn = state.h.coeffs, state.ht.coeffs
    lap_h = _lap_eps(hn, k, eps, dy)
    lap_ht = _lap_eps(htn, k, eps, dy)
    c2 = dt * dt * gamma / (4.0 * beta)
    rhs_w = (1.0 - dt / (2.0 * beta)) * htn + c2 * lap_ht \
        + (dt * gamma / beta) * lap_h + dt * ab[2]
    htp = _wave_solve(g, eps, dt, beta, gamma, rhs_w)
    hp = hn + 0.5 * dt * (htn + htp)

    real = state.u.reality
    phi, du, dv = pressure_projection_eps(
        SpectralField(g, ustar, reality=real),
        SpectralField(g, eps**2 * vstar, reality=real), eps)
    # the lagged-pressure gradient leaves slip on the walls; u is Dirichlet,
    # and the projection's wall rows hold v's walls only to solver roundoff
    unew = SpectralField(g, _wall_zero(du.coeffs), reality=real)
    vnew = SpectralField(g, _wall_zero(dv.coeffs), reality=real)
    p_new = SpectralField(g, state.p.coeffs + phi.coeffs / dt,
                          reality=state.p.reality and real)

    ht_new = SpectralField(g, htp, reality=state.ht.reality)
    h_new = SpectralField(g, hp, reality=state.h.reality)
    pair = recover_div_free_from_curl(ht_new)

    interim = replace(
        state, t=state.t + dt, u=unew, v=vnew, h=h_new, ht=ht_new,
        e=pair.first, f=pair.second, p=p_new)
    ex_new = _explicit_parts(unew, vnew, h_new, pair.first, pair.second, par)
    tend, _ = _instantaneous(interim, ex_new)
    return replace(interim, tendencies=tend,
                   explicit_now=ex_new, explicit_prev=ex_now)


# ---------------------------------------------------------------------------
# invariants

def state_metrics(state: NSMState) -> dict:
    """Relative interior residuals of the three structural constraints."""
    cg = curl(state.e, state.f)
    a = state.ht.coeffs[:, 1:-1]
    b = cg.coeffs[:, 1:-1]
    scale = max(float(np.max(np.abs(a))), float(np.max(np.abs(b))), 1e-300)
    faraday = float(np.max(np.abs(a - b))) / scale
    return {
        "div_uv": interior_divergence_residual(state.u, state.v),
        "div_ef": interior_divergence_residual(state.e, state.f),
        "faraday": faraday,
    }


_MIRROR_PARITY = {"u": -1, "f": -1, "v": 1, "h": 1, "ht": 1, "e": 1, "p": 1}


def mirror_defect(state: NSMState) -> float:
    """Deviation from the x-mirror class (u, f odd; v, h, ht, e, p even).

    Returns the worst relative defect |c(-k) - parity * c(k)| over the
    paired mode slots of every field.
    """
    g = state.grid
    kidx = g.k_index
    slot_of = {int(kidx[i]): i for i in range(g.Nx)}
    worst = 0.0
    for name, parity in _MIRROR_PARITY.items():
        c = getattr(state, name).coeffs
        scale = max(float(np.max(np.abs(c))), 1e-300)
        for kk in range(1, g.Nx // 2):
            d = np.max(np.abs(c[slot_of[-kk]] - parity * c[slot_of[kk]]))
            worst = max(worst, float(d) / scale)
    return worst


# ---------------------------------------------------------------------------
# linear runner

def _sbp_dirichlet_energy(c: np.ndarray, dy: float) -> np.ndarray:
    """Per-mode summation-by-parts form (1/dy) sum |c_{j+1} - c_j|^2.

    This is the discrete realization of ||dy field||^2 in which the
    3-point Dirichlet operator is exactly symmetric negative, so the
    Crank-Nicolson heat and wave energies are provably nonincreasing.
    """
    d = np.diff(c, axis=-1)
    return np.sum(np.abs(d) ** 2, axis=-1) / dy


def _l2_energy(c: np.ndarray, dy: float) -> np.ndarray:
    return np.sum(np.abs(c[:, 1:-1]) ** 2, axis=-1) * dy


@dataclass
class LinearRunResult:
    times: np.ndarray
    heat_energy: np.ndarray
    wave_energy: np.ndarray
    wave_dissipation: float
    max_heat_violation: float
    max_wave_violation: float
    final_u: SpectralField
    final_h: SpectralField
    final_ht: SpectralField


def run_linear(state0: NSMState, params: Optional[PhysicalParams] = None,
               T: float = 0.01, dt: float = 1e-3,
               weight: Optional[GevreyWeight] = None) -> LinearRunResult:
    """Evolve the decoupled linear problems and record their energies.

    u obeys the anisotropic heat equation, (h, ht) the damped wave; no
    advection, coupling, or pressure.  Recorded series: the weighted
    summation-by-parts energy of dy u at index s+1, and the wave energy
    (beta/2)||ht||^2 + (gamma/2)||(eps dx, dy)h||^2 at the same index,
    both under the weight's (possibly shrinking) radius.
    """
    par = state0.params if params is None else params
    g = state0.grid
    if weight is None:
        weight = GevreyWeight(1.0, 10.0,
                              LambdaSchedule("constant_rate", C=1.0, C_in=1.0,
                                             delta0=1.0))
    w_idx = weight.shifted(1.0)
    eps, beta, gamma = par.eps, par.beta, par.gamma
    k, dy = g.k, g.dy

    n = max(1, int(round(T / dt)))
    uc = state0.u.coeffs.copy()
    hc = state0.h.coeffs.copy()
    htc = state0.ht.coeffs.copy()

    def weights_sq(t: float) -> np.ndarray:
        delta = w_idx.radius(t)
        return np.asarray(gevrey_multiplier(k, delta, w_idx.s)) ** 2

    def heat_energy(c: np.ndarray, t: float) -> float:
        return float(np.sum(weights_sq(t) * _sbp_dirichlet_energy(c, dy)))

    def wave_energy(h_c: np.ndarray, ht_c: np.ndarray, t: float) -> float:
        w2 = weights_sq(t)
        grad = (eps**2 * k**2) * _l2_energy(h_c, dy) \
            + _sbp_dirichlet_energy(h_c, dy)
        return float(np.sum(w2 * (0.5 * beta * _l2_energy(ht_c, dy)
                                  + 0.5 * gamma * grad)))

    times = np.empty(n + 1)
    e_heat = np.empty(n + 1)
    e_wave = np.empty(n + 1)
    times[0] = state0.t
    e_heat[0] = heat_energy(uc, state0.t)
    e_wave[0] = wave_energy(hc, htc, state0.t)

    bu = eps**2 * k**2
    dissipation = 0.0
    max_hv = 0.0
    max_wv = 0.0
    t = state0.t
    for i in range(1, n + 1):
        uc = _cn_solve(g, bu, dt, _cn_forward(uc, bu, dt, dy))
        lap_h = _lap_eps(hc, k, eps, dy)
        lap_ht = _lap_eps(htc, k, eps, dy)
        c2 = dt * dt * gamma / (4.0 * beta)
        rhs_w = (1.0 - dt / (2.0 * beta)) * htc + c2 * lap_ht \
            + (dt * gamma / beta) * lap_h
        htp = _wave_solve(g, eps, dt, beta, gamma, rhs_w)
        hmid = 0.5 * (htc + htp)
        hc = hc + dt * hmid
        t = state0.t + i * dt
        dissipation += dt * float(np.sum(weights_sq(t) * _l2_energy(hmid, dy)))
        htc = htp
        times[i] = t
        e_heat[i] = heat_energy(uc, t)
        e_wave[i] = wave_energy(hc, htc, t)
        max_hv = max(max_hv, (e_heat[i] - e_heat[i - 1])
                     / max(e_heat[i - 1], 1e-300))
        max_wv = max(max_wv, (e_wave[i] - e_wave[i - 1])
                     / max(e_wave[i - 1], 1e-300))

    real = state0.u.reality
    return LinearRunResult(
        times=times, heat_energy=e_heat, wave_energy=e_wave,
        wave_dissipation=dissipation,
        max_heat_violation=max(max_hv, 0.0),
        max_wave_violation=max(max_wv, 0.0),
        final_u=SpectralField(g, uc, reality=real),
        final_h=SpectralField(g, hc, reality=real),
        final_ht=SpectralField(g, htc, reality=real))


# ---------------------------------------------------------------------------
# full nonlinear runner

@dataclass
class RunResult:
    times: np.ndarray
    monitor_u: np.ndarray          # ||u||^2 at the frozen (delta0/2, s) weight
    monitor_dyh: np.ndarray        # ||dy h||^2, same weight
    div_uv: np.ndarray
    div_ef: np.ndarray
    faraday: np.ndarray
    reports: list
    report_times: list
    final_state: NSMState
    status: str                    # "completed" | "blowup"
    blowup_time: Optional[float]
    horizon_exceeded: bool
    schedule: Optional[LambdaSchedule]
    weight: GevreyWeight
    snapshots: Optional[list] = None


def _schedule_from_config(cfg: RunConfig) -> Optional[LambdaSchedule]:
    gv = cfg.section("gevrey")
    if gv["schedule"] == "none":
        return None
    if gv["schedule"] == "constant_rate":
        return LambdaSchedule("constant_rate", C=gv["C"], C_in=gv["C_in"],
                              delta0=gv["delta0"])
    theta = gv["theta"] if gv["theta"] is not None else _AUTO_THETA
    return LambdaSchedule("gwp_decaying", delta0=gv["delta0"], theta=theta)


def params_from_config(cfg: RunConfig) -> PhysicalParams:
    pr = cfg.section("params")
    return PhysicalParams(eps=pr["eps"], mu=pr["mu"], mu0=pr["mu0"],
                          alpha=pr["alpha"], normalized=pr["normalized"])


def _run_loop(state: NSMState, step_fn: Callable, dt: float, n: int,
              stride: int, weight: GevreyWeight, monitor_w: GevreyWeight,
              schedule: Optional[LambdaSchedule],
              recorder: Optional[Callable] = None,
              keep_fields: bool = False) -> RunResult:
    """Shared integrate-and-monitor loop of run_full and run_hydrostatic."""
    times = [state.t]
    mon_u = [gevrey_norm(state.u, monitor_w) ** 2]
    mon_dyh = [gevrey_norm(ddy(state.h), monitor_w) ** 2]
    m0 = state_metrics(state)
    div_uv = [m0["div_uv"]]
    div_ef = [m0["div_ef"]]
    faraday = [m0["faraday"]]
    reports = []
    report_times = []
    snapshots = []
    if recorder is not None:
        reports.append(recorder(state, weight))
        report_times.append(state.t)
    if keep_fields:
        snapshots.append((state.t, state))

    status = "completed"
    blowup_time = None
    horizon = False
    for i in range(1, n + 1):
        state_next = step_fn(state, dt)
        nu = gevrey_norm(state_next.u, monitor_w)
        nh = gevrey_norm(ddy(state_next.h), monitor_w)
        if not (math.isfinite(nu) and math.isfinite(nh)) \
                or max(nu, nh) > _BLOWUP_NORM:
            status = "blowup"
            blowup_time = state_next.t
            break
        state = state_next
        m = state_metrics(state)
        times.append(state.t)
        mon_u.append(nu**2)
        mon_dyh.append(nh**2)
        div_uv.append(m["div_uv"])
        div_ef.append(m["div_ef"])
        faraday.append(m["faraday"])
        if weight.horizon_exceeded(state.t):
            horizon = True
        if recorder is not None and i % stride == 0:
            reports.append(recorder(state, weight))
            report_times.append(state.t)
        if keep_fields and i % stride == 0:
            snapshots.append((state.t, state))

    result = RunResult(
        times=np.asarray(times), monitor_u=np.asarray(mon_u),
        monitor_dyh=np.asarray(mon_dyh), div_uv=np.asarray(div_uv),
        div_ef=np.asarray(div_ef), faraday=np.asarray(faraday),
        reports=reports, report_times=report_times, final_state=state,
        status=status, blowup_time=blowup_time, horizon_exceeded=horizon,
        schedule=schedule, weight=weight,
        snapshots=snapshots if keep_fields else None)
    return result


def run_full(cfg: RunConfig, recorder: Optional[Callable] = None,
             keep_fields: bool = False) -> RunResult:
    """Integrate the full system as described by a validated config.

    recorder(state, weight) is called every `time.stride` steps (and at
    t=0); its return values are collected in RunResult.reports — the
    orchestrator passes the energy-report builder here.  Blow-up (monitor
    norm above 1e12 or non-finite) stops the run and returns the last
    valid state; exceeding the radius-budget horizon only sets a flag.
    """
    gr = cfg.section("grid")
    tm = cfg.section("time")
    da = cfg.section("data")
    gv = cfg.section("gevrey")
    grid = make_grid(gr["Nx"], gr["Ny"])
    par = params_from_config(cfg)
    schedule = _schedule_from_config(cfg)
    weight = GevreyWeight(gv["delta0"], gv["s"], schedule)
    monitor_w = GevreyWeight(0.5 * gv["delta0"], gv["s"], None)

    spec = InitialDataSpec(amplitude=da["amplitude"], delta0=gv["delta0"],
                           s=gv["s"], seed=cfg.data_seed(),
                           profile=da["profile"], kappa=da["kappa"])
    state = init_data_gevrey(spec, grid, par)

    dt = tm["dt"]
    n = max(1, int(round(tm["T"] / dt)))
    return _run_loop(state, step_imex, dt, n, tm["stride"], weight,
                     monitor_w, schedule, recorder, keep_fields)
