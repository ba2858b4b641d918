"""Time integration of the hydrostatic limit system.

Prognostic fields are (u, h, ht); the vertical velocity is reconstructed
from u at every stage and never time-stepped, and the vertical momentum
equation collapses into the pressure relation implemented by
`hydrostatic_pressure`.  The horizontal solve carries an exact per-mode
flux closure: the surface pressure is chosen so the chain-quadrature flux
of each u-mode (k != 0) is conserved bitwise by the update, which keeps
the reconstructed v pinned to zero on the top wall for all time.
"""

from __future__ import annotations

from dataclasses import replace
from functools import lru_cache
from typing import Callable, Optional

import numpy as np

from .config import RunConfig
from .gevrey import GevreyWeight
from .grid import (
    Grid,
    SpectralField,
    ddx,
    ddy,
    dealiased_product,
    make_grid,
    trapz_y,
)
from .recovery import (
    discrete_antiderivative,
    hydrostatic_pressure,
    recover_div_free_from_curl,
    top_wall_residual,
    v_from_u,
)
from .system import (
    CFLError,
    InitialDataSpec,
    NSMState,
    RunResult,
    _cfl_limit,
    _cn_forward,
    _cn_solve,
    _lap_eps,
    _run_loop,
    _schedule_from_config,
    _wall_zero,
    _wave_solve,
    init_data_gevrey,
    params_from_config,
)

__all__ = [
    "rhs_hydrostatic",
    "step_hydrostatic",
    "run_hydrostatic",
    "flux_metrics",
]


def _coupling(u, h, f, alpha: float, printed_sign: bool):
    """alpha (f + f h - 2 u h - u h^2), the explicit part of the u coupling.

    The -alpha u damping is excluded (implicit).  printed_sign=True flips
    the quadratic term to +2 u h, the sign pattern of the limit system as
    usually displayed; the default matches the eps-system's coupling so
    that trajectories are the actual eps -> 0 limits.
    """
    uh = dealiased_product(u, h)
    uh2 = dealiased_product(uh, h)
    fh = dealiased_product(f, h)
    sgn = 2.0 if printed_sign else -2.0
    return (f + fh + uh * sgn + uh2 * (-1.0)) * alpha


def _explicit_hydro(state: NSMState, printed_sign: bool) -> tuple:
    """Advection plus coupling products, the Adams-Bashforth half."""
    u, v, h = state.u, state.v, state.h
    adv_u = dealiased_product(u, ddx(u)) + dealiased_product(v, ddy(u))
    adv_h = dealiased_product(u, ddx(h)) + dealiased_product(v, ddy(h))
    ex_u = -adv_u + _coupling(u, h, state.f, state.params.alpha, printed_sign)
    ex_ht = adv_h * (-1.0 / state.params.beta)
    return (ex_u, ex_ht)


def _instantaneous_hydro(state: NSMState, printed_sign: bool) -> tuple:
    """Full tendencies, diagnostic pressure, and the explicit memory pair.

    du = ex_u + dyy u - alpha u - ik p with p = q + p_s from the pressure
    relation; the surface part is fixed so the y-averaged du vanishes for
    k != 0.  dv is the exact-discrete reconstruction applied to du (v is
    a linear functional of u, so its tendency is the same functional of
    du).  The memory pair stores ex_u - ik p, i.e. the pressure gradient
    rides along in the Adams-Bashforth extrapolation.
    """
    g = state.grid
    par = state.params
    al, beta, gamma = par.alpha, par.beta, par.gamma
    real = state.u.reality

    ex_u, ex_ht = _explicit_hydro(state, printed_sign)
    r0 = ex_u.coeffs + _lap_eps(state.u.coeffs, g.k, 0.0, g.dy) \
        - al * state.u.coeffs
    r0f = SpectralField(g, _wall_zero(r0), reality=real)
    p = hydrostatic_pressure(state.e, state.f, state.v, state.h, al,
                             u_tendency=r0f)
    grad_p = (1j * g.k)[:, None] * p.coeffs
    du = SpectralField(g, _wall_zero(r0 - grad_p), reality=real)
    dv = v_from_u(du, variant="exact_discrete")
    dht_c = ex_ht.coeffs + (gamma * _lap_eps(state.h.coeffs, g.k, 0.0, g.dy)
                            - state.ht.coeffs) / beta
    dht = SpectralField(g, _wall_zero(dht_c), reality=state.ht.reality)
    tend = {"du": du, "dv": dv, "dh": state.ht.copy(), "dht": dht}
    mem = (SpectralField(g, ex_u.coeffs - grad_p, reality=real), ex_ht)
    return tend, p, mem


def rhs_hydrostatic(state: NSMState, printed_sign: bool = False) -> tuple:
    """Instantaneous tendencies (du, dh, dht) of the limit system.

    Unlike the eps-system's split right-hand side this is the complete
    tendency: du = -u dx u - v dy u + dyy u - dx p - alpha u + coupling,
    with the pressure from the hydrostatic relation.  The stepper treats
    dyy and the dampings implicitly; they are assembled here only for
    diagnostics.
    """
    v = state.v
    vscale = max(float(np.max(np.abs(v.coeffs))), 1e-300)
    resid = top_wall_residual(v) / vscale
    if resid > 1e-6:
        raise ValueError(
            f"diagnostic v violates top-wall no-slip: relative residual "
            f"{resid:.2e}; reconstruct v from u before taking tendencies")
    tend, _, _ = _instantaneous_hydro(state, printed_sign)
    return (tend["du"], tend["dh"], tend["dht"])


@lru_cache(maxsize=8)
def _closure_profile(grid: Grid, dt: float, alpha: float) -> tuple:
    """Lift profile A^{-1} 1 of the horizontal solve and its chain flux.

    A = I - (dt/2)(L - alpha) does not depend on k here (no eps^2 k^2
    shift in the limit system), so one tridiagonal solve serves every
    mode and the closure costs two quadratures per step.
    """
    rhs = np.zeros((1, grid.Ny + 2), dtype=np.complex128)
    rhs[0, 1:-1] = 1.0
    prof = np.real(_cn_solve(grid, np.array([alpha]), dt, rhs)[0]).copy()
    flux = float(discrete_antiderivative(prof, grid.dy)[-1])
    return prof, flux


def _chain_flux(c: np.ndarray, dy: float) -> np.ndarray:
    return discrete_antiderivative(c, dy)[..., -1]


def step_hydrostatic(state: NSMState, dt: float,
                     printed_sign: bool = False) -> NSMState:
    """One CN/AB2 step of the limit system; Euler fallback on the first call.

    The horizontal solve runs without a surface pressure first, then the
    tentative solution is shifted along the cached lift profile by exactly
    the amount that restores each mode's chain flux, so the per-mode flux
    of u (k != 0) is conserved to rounding no matter how long the run.
    """
    if dt <= 0.0:
        raise ValueError("dt must be positive")
    lim = _cfl_limit(state)
    if dt > lim:
        raise CFLError(f"dt={dt:g} exceeds the advective bound {lim:g}")

    g = state.grid
    par = state.params
    al, beta, gamma = par.alpha, par.beta, par.gamma
    k, dy = g.k, g.dy
    real = state.u.reality

    ex_now = state.explicit_now
    if ex_now is None or len(ex_now) != 2:
        # fresh state, or one carrying the eps-system's triple memory
        _, _, ex_now = _instantaneous_hydro(state, printed_sign)
    if state.explicit_prev is None or len(state.explicit_prev) != 2:
        ab = tuple(x.coeffs for x in ex_now)
    else:
        ab = tuple(1.5 * a.coeffs - 0.5 * b.coeffs
                   for a, b in zip(ex_now, state.explicit_prev))

    alvec = np.full(g.Nx, al)
    rhs_u = _cn_forward(state.u.coeffs, alvec, dt, dy)
    rhs_u[:, 1:-1] += dt * ab[0][:, 1:-1]
    u_tent = _cn_solve(g, alvec, dt, rhs_u)

    prof, prof_flux = _closure_profile(g, dt, al)
    drift = _chain_flux(u_tent, dy) - _chain_flux(state.u.coeffs, dy)
    ps = np.zeros(g.Nx, dtype=np.complex128)
    nz = k != 0.0
    ps[nz] = drift[nz] / (dt * 1j * k[nz] * prof_flux)
    u_new_c = u_tent - (dt * 1j * k * ps)[:, None] * prof[None, :]
    unew = SpectralField(g, _wall_zero(u_new_c), reality=real)

    hn, htn = state.h.coeffs, state.ht.coeffs
    lap_h = _lap_eps(hn, k, 0.0, dy)
    lap_ht = _lap_eps(htn, k, 0.0, dy)
    c2 = dt * dt * gamma / (4.0 * beta)
    rhs_w = (1.0 - dt / (2.0 * beta)) * htn + c2 * lap_ht \
        + (dt * gamma / beta) * lap_h + dt * ab[1]
    htp = _wave_solve(g, 0.0, dt, beta, gamma, rhs_w)
    hp = hn + 0.5 * dt * (htn + htp)

    ht_new = SpectralField(g, htp, reality=state.ht.reality)
    h_new = SpectralField(g, hp, reality=state.h.reality)
    vnew = v_from_u(unew, variant="exact_discrete")
    pair = recover_div_free_from_curl(ht_new)

    interim = replace(
        state, t=state.t + dt, u=unew, v=vnew, h=h_new, ht=ht_new,
        e=pair.first, f=pair.second)
    tend, p_new, mem = _instantaneous_hydro(interim, printed_sign)
    return replace(interim, p=p_new, tendencies=tend,
                   explicit_now=mem, explicit_prev=ex_now)


def flux_metrics(state: NSMState) -> dict:
    """Closure health: worst u-mode flux (k != 0) and the v top-wall value.

    "chain" is the quadrature the closure conserves, "trapz" the plain
    trapezoid integral (zero on the initial data, held only to O(dy^2)
    thereafter); both are absolute, not relative.
    """
    g = state.grid
    nz = g.k != 0.0
    chain = np.abs(_chain_flux(state.u.coeffs, g.dy))
    trap = np.abs(trapz_y(state.u.coeffs, g.dy, axis=-1))
    return {
        "flux_chain": float(np.max(chain[nz])) if nz.any() else 0.0,
        "flux_trapz": float(np.max(trap[nz])) if nz.any() else 0.0,
        "v_top": top_wall_residual(state.v),
    }


def run_hydrostatic(cfg: RunConfig, recorder: Optional[Callable] = None,
                    keep_fields: bool = False) -> RunResult:
    """Integrate the limit system from a validated config; mirrors run_full.

    Initial data comes from the same seeded generator as the eps-runs, so
    a convergence study can hand both solvers identical fields.  The only
    mode-specific knob is hydrostatic.printed_coupling_sign.
    """
    gr = cfg.section("grid")
    tm = cfg.section("time")
    da = cfg.section("data")
    gv = cfg.section("gevrey")
    printed = cfg.section("hydrostatic")["printed_coupling_sign"]
    grid = make_grid(gr["Nx"], gr["Ny"])
    par = params_from_config(cfg)
    schedule = _schedule_from_config(cfg)
    weight = GevreyWeight(gv["delta0"], gv["s"], schedule)
    monitor_w = GevreyWeight(0.5 * gv["delta0"], gv["s"], None)

    spec = InitialDataSpec(amplitude=da["amplitude"], delta0=gv["delta0"],
                           s=gv["s"], seed=cfg.data_seed(),
                           profile=da["profile"], kappa=da["kappa"])
    state = init_data_gevrey(spec, grid, par)
    # replace the generator's eps-system diagnostics with this system's
    tend, p0, mem = _instantaneous_hydro(state, printed)
    state = replace(state, p=p0, tendencies=tend,
                    explicit_now=mem, explicit_prev=None)

    def step(s: NSMState, step_dt: float) -> NSMState:
        return step_hydrostatic(s, step_dt, printed_sign=printed)

    dt = tm["dt"]
    n = max(1, int(round(tm["T"] / dt)))
    return _run_loop(state, step, dt, n, tm["stride"], weight,
                     monitor_w, schedule, recorder, keep_fields)
