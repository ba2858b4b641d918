"""Evolution module: parameters, seeded data, tendencies, stepping, runners."""

import math

import numpy as np
import pytest

from striplab.config import default_config
from striplab.gevrey import GevreyWeight, LambdaSchedule, gevrey_norm
from striplab.grid import (
    SpectralField,
    ddy,
    make_grid,
    mode_field,
    reality_defect,
    to_physical,
    zero_field,
)
from striplab.recovery import recover_div_free_from_curl, v_from_u
from striplab.system import (
    CFLError,
    InitialDataSpec,
    NSMState,
    PhysicalParams,
    init_data_gevrey,
    mirror_defect,
    rhs_full,
    rhs_linear,
    run_full,
    run_linear,
    state_metrics,
    step_imex,
)


def conv_coeffs(a, b, kidx, keep):
    """Brute-force dealiased convolution on integer mode labels."""
    out = np.zeros_like(a)
    lab = {int(kidx[i]): i for i in range(len(kidx))}
    for i, ki in enumerate(kidx):
        if not keep[i]:
            continue
        for j, kj in enumerate(kidx):
            if not keep[j]:
                continue
            h = int(ki + kj)
            if h in lab and keep[lab[h]]:
                out[lab[h]] += a[i] * b[j]
    return out


def sine(y, m):
    prof = np.sin(m * np.pi * y)
    prof[0] = 0.0
    prof[-1] = 0.0
    return prof


def discrete_eig(m, dy):
    """Eigenvalue of the 3-point Dirichlet Laplacian at sin(m pi y)."""
    return -4.0 * np.sin(m * np.pi * dy / 2.0) ** 2 / dy**2


def bare_state(grid, par, **fields):
    z = zero_field(grid)
    base = dict(u=z, v=zero_field(grid), h=zero_field(grid),
                ht=zero_field(grid), e=zero_field(grid), f=zero_field(grid),
                p=zero_field(grid))
    base.update(fields)
    return NSMState(t=0.0, params=par, grid=grid, **base)


class TestPhysicalParams:
    def test_derived_scalings(self):
        par = PhysicalParams(eps=0.5, mu=2.0, mu0=1.5)
        assert par.alpha == pytest.approx(0.5)
        assert par.beta == pytest.approx(1.0 / (4.0 * 1.5 * 0.5))
        assert par.gamma == pytest.approx(1.0 / (1.5 * 0.5))
        assert par.m == pytest.approx(2.0)

    def test_normalized_convention(self):
        par = PhysicalParams(eps=0.25, mu=3.0, normalized=True)
        assert (par.alpha, par.beta, par.gamma) == (1.0, 1.0, 1.0)

    def test_direct_alpha(self):
        par = PhysicalParams(eps=0.5, alpha=2.0)
        assert par.alpha == 2.0
        assert par.beta == pytest.approx(0.5)

    @pytest.mark.parametrize("bad", [
        dict(eps=0.0), dict(eps=1.5), dict(mu=-1.0), dict(mu0=0.0),
        dict(alpha=-0.1)])
    def test_rejects_bad_values(self, bad):
        with pytest.raises(ValueError):
            PhysicalParams(**bad)


class TestInitData:
    def setup_method(self):
        self.grid = make_grid(32, 64)
        self.par = PhysicalParams(eps=0.5)

    def test_zero_amplitude_zero_state(self):
        st = init_data_gevrey(InitialDataSpec(amplitude=0.0), self.grid, self.par)
        for name in ("u", "v", "h", "ht", "e", "f"):
            assert not np.any(getattr(st, name).coeffs)

    def test_invariant_suite(self):
        st = init_data_gevrey(InitialDataSpec(seed=5, s=4.0), self.grid, self.par)
        m = state_metrics(st)
        assert m["div_uv"] < 1e-9
        assert m["div_ef"] < 1e-9
        assert m["faraday"] < 1e-9
        for name in ("u", "h", "ht"):
            walls = getattr(st, name).coeffs[:, [0, -1]]
            assert np.max(np.abs(walls)) == 0.0
        assert np.max(np.abs(st.f.coeffs[:, [0, -1]])) == 0.0
        # the u profiles have zero chain-quadrature flux by construction, so
        # the exact-discrete reconstruction vanishes at both walls (the top
        # only to rounding of the telescoping sum)
        assert np.max(np.abs(st.v.coeffs[:, 0])) == 0.0
        vscale = np.max(np.abs(st.v.coeffs))
        assert np.max(np.abs(st.v.coeffs[:, -1])) < 1e-11 * vscale
        for name in ("u", "v", "h", "ht", "e", "f"):
            assert reality_defect(getattr(st, name)) < 1e-13

    def test_amplitude_linearity(self):
        w = GevreyWeight(1.0, 4.5, None)
        vals = []
        for amp in (1.0, 2.0, 4.0):
            st = init_data_gevrey(
                InitialDataSpec(amplitude=amp, s=4.0, seed=2), self.grid, self.par)
            vals.append(gevrey_norm(ddy(st.u), w))
        assert vals[0] > 0.0
        assert abs(vals[1] / vals[0] - 2.0) < 1e-10
        assert abs(vals[2] / vals[0] - 4.0) < 1e-10

    def test_kappa_rescale_hits_target(self):
        spec = InitialDataSpec(amplitude=0.3, s=4.0, seed=1, kappa=0.05)
        st = init_data_gevrey(spec, self.grid, self.par)
        w = GevreyWeight(1.0, 4.5, None)
        total = math.fsum(gevrey_norm(ddy(x), w) ** 2
                          for x in (st.u, st.e, st.f, st.h))
        assert math.sqrt(total) == pytest.approx(0.05, rel=1e-12)

    def test_seed_determinism(self):
        a = init_data_gevrey(InitialDataSpec(seed=9, s=4.0), self.grid, self.par)
        b = init_data_gevrey(InitialDataSpec(seed=9, s=4.0), self.grid, self.par)
        c = init_data_gevrey(InitialDataSpec(seed=10, s=4.0), self.grid, self.par)
        assert np.array_equal(a.u.coeffs, b.u.coeffs)
        assert not np.array_equal(a.u.coeffs, c.u.coeffs)

    def test_tendencies_attached(self):
        st = init_data_gevrey(InitialDataSpec(seed=0, s=4.0), self.grid, self.par)
        assert st.tendencies is not None
        assert np.array_equal(st.tendencies["dh"].coeffs, st.ht.coeffs)
        assert np.max(np.abs(st.p.coeffs)) > 0.0


class TestRhsFull:
    def setup_method(self):
        self.grid = make_grid(16, 48)
        self.par = PhysicalParams(eps=0.5, mu=2.0)

    def test_zero_state(self):
        out = rhs_full(bare_state(self.grid, self.par))
        for fld in out:
            assert not np.any(fld.coeffs)

    def test_single_mode_advection_and_damping(self):
        g = self.grid
        u = mode_field(g, 2, 0.05 * sine(g.y, 1))
        st = bare_state(g, self.par, u=u)
        du, dv, dh, dht = rhs_full(st)
        # independent path: -u du/dx via brute-force convolution, then -alpha u
        dux = u.coeffs * (1j * g.k)[:, None]
        adv = conv_coeffs(u.coeffs, dux, g.k_index, g.dealias_keep)
        expected = -adv - self.par.alpha * u.coeffs
        assert np.max(np.abs(du.coeffs - expected)) < 1e-13
        assert not np.any(dv.coeffs)
        assert not np.any(dh.coeffs) and not np.any(dht.coeffs)

    def test_u_coupling_sign_pattern(self):
        # du coupling must be alpha (f + f h - u - 2 u h - u h^2)
        g = self.grid
        kidx, keep = g.k_index, g.dealias_keep
        u = mode_field(g, 1, 0.05 * sine(g.y, 1))
        h = mode_field(g, 2, 0.03 * sine(g.y, 1))
        f = mode_field(g, 3, 0.02 * sine(g.y, 2))
        st = bare_state(g, self.par, u=u, h=h, f=f)
        du = rhs_full(st)[0]
        al = self.par.alpha
        uh = conv_coeffs(u.coeffs, h.coeffs, kidx, keep)
        uh2 = conv_coeffs(uh, h.coeffs, kidx, keep)
        fh = conv_coeffs(f.coeffs, h.coeffs, kidx, keep)
        dux = u.coeffs * (1j * g.k)[:, None]
        adv = conv_coeffs(u.coeffs, dux, kidx, keep)
        expected = -adv + al * (f.coeffs + fh - u.coeffs - 2.0 * uh - uh2)
        assert np.max(np.abs(du.coeffs - expected)) < 1e-14

    def test_v_coupling_and_wave_advection(self):
        g = self.grid
        kidx, keep = g.k_index, g.dealias_keep
        v = mode_field(g, 1, 0.04 * sine(g.y, 1))
        e = mode_field(g, 2, 0.03 * sine(g.y, 2))
        h = mode_field(g, 1, 0.05 * sine(g.y, 1))
        u = mode_field(g, 2, 0.02 * sine(g.y, 2))
        st = bare_state(g, self.par, u=u, v=v, e=e, h=h)
        du, dv, dh, dht = rhs_full(st)
        al, eps, beta = self.par.alpha, self.par.eps, self.par.beta
        vh = conv_coeffs(v.coeffs, h.coeffs, kidx, keep)
        vh2 = conv_coeffs(vh, h.coeffs, kidx, keep)
        eh = conv_coeffs(e.coeffs, h.coeffs, kidx, keep)
        dvx = v.coeffs * (1j * g.k)[:, None]
        adv_v = conv_coeffs(u.coeffs, dvx, kidx, keep) \
            + conv_coeffs(v.coeffs, ddy(v).coeffs, kidx, keep)
        exp_v = -adv_v - (al / eps**2) * (e.coeffs + eh + v.coeffs + 2.0 * vh + vh2)
        assert np.max(np.abs(dv.coeffs - exp_v)) < 1e-12
        dhx = h.coeffs * (1j * g.k)[:, None]
        adv_h = conv_coeffs(u.coeffs, dhx, kidx, keep) \
            + conv_coeffs(v.coeffs, ddy(h).coeffs, kidx, keep)
        assert np.max(np.abs(dht.coeffs + adv_h / beta)) < 1e-13

    def test_linearized_consistency(self):
        # (rhs_full - rhs_linear) / amplitude^2 stays bounded as amplitude -> 0
        g = make_grid(32, 64)
        par = PhysicalParams(eps=0.5)
        ratios = []
        for amp in (1e-2, 5e-3):
            st = init_data_gevrey(
                InitialDataSpec(amplitude=amp, s=4.0, seed=4), g, par)
            full = rhs_full(st)
            lin = rhs_linear(st)
            worst = max(np.max(np.abs(a.coeffs - b.coeffs))
                        for a, b in zip(full, lin))
            ratios.append(worst / amp**2)
        assert ratios[0] > 0.0
        assert ratios[1] < ratios[0] * 1.5


class TestStepImex:
    def test_zero_fixed_point(self):
        g = make_grid(16, 32)
        st = bare_state(g, PhysicalParams(eps=0.5))
        nxt = step_imex(st, 1e-3)
        assert nxt.t == pytest.approx(1e-3)
        for name in ("u", "v", "h", "ht", "e", "f", "p"):
            assert not np.any(getattr(nxt, name).coeffs)

    def test_rejects_nonpositive_dt(self):
        g = make_grid(16, 32)
        st = bare_state(g, PhysicalParams(eps=0.5))
        with pytest.raises(ValueError):
            step_imex(st, 0.0)

    def test_cfl_violation_raises(self):
        g = make_grid(16, 32)
        u = mode_field(g, 0, 50.0 * sine(g.y, 1))
        st = bare_state(g, PhysicalParams(eps=0.5), u=u)
        with pytest.raises(CFLError):
            step_imex(st, 0.5)

    def test_mean_mode_heat_with_damping_exact(self):
        # k=0, profile = discrete eigenvector: every step multiplies by the
        # CN rational function of dt*(lam_m - alpha), exactly
        g = make_grid(16, 48)
        par = PhysicalParams(eps=0.5, mu=2.0)
        u = mode_field(g, 0, 0.01 * sine(g.y, 2))
        st = bare_state(g, par, u=u)
        dt = 1e-3
        lam = discrete_eig(2, g.dy) - par.alpha
        phi = (1.0 + 0.5 * dt * lam) / (1.0 - 0.5 * dt * lam)
        n = 20
        for _ in range(n):
            st = step_imex(st, dt)
        expected = u.coeffs * phi**n
        err = np.max(np.abs(st.u.coeffs - expected))
        assert err < 1e-12 * np.max(np.abs(expected))
        # and O(dt^2) against the continuum e^{lam t}
        cont = u.coeffs * np.exp(lam * n * dt)
        assert np.max(np.abs(st.u.coeffs - cont)) < 5e-4 * np.max(np.abs(cont))

    def test_damped_wave_exact_propagator_order(self):
        # single decaying branch: beta mu^2 + mu + gamma a = 0 with a the
        # discrete per-mode symbol; dt halving must reduce error ~4x
        g = make_grid(16, 96)
        par = PhysicalParams(eps=0.5, mu=2.0, mu0=1.5)
        k = 2
        prof = 0.01 * sine(g.y, 1)
        a = par.eps**2 * k**2 - discrete_eig(1, g.dy)
        mu = (-1.0 + np.sqrt(1.0 - 4.0 * par.beta * par.gamma * a + 0j)) \
            / (2.0 * par.beta)
        errs = []
        for dt in (2e-3, 1e-3, 5e-4):
            h = mode_field(g, k, prof)
            ht = SpectralField(g, h.coeffs * mu, reality=False)
            pair = recover_div_free_from_curl(ht)
            st = bare_state(g, par, h=h, ht=ht, e=pair.first, f=pair.second)
            for _ in range(int(round(0.02 / dt))):
                st = step_imex(st, dt)
            exact = h.coeffs * np.exp(mu * 0.02)
            errs.append(np.max(np.abs(st.h.coeffs - exact)))
        assert 3.5 < errs[0] / errs[1] < 4.5
        assert 3.5 < errs[1] / errs[2] < 4.5

    def test_invariants_along_nonlinear_run(self):
        g = make_grid(32, 64)
        par = PhysicalParams(eps=0.5)
        st = init_data_gevrey(InitialDataSpec(amplitude=0.05, s=4.0, seed=3),
                              g, par)
        for _ in range(20):
            st = step_imex(st, 5e-4)
            m = state_metrics(st)
            assert m["div_uv"] < 1e-9
            assert m["div_ef"] < 1e-9
            assert m["faraday"] < 1e-9
        for name in ("u", "v", "h", "ht"):
            assert np.max(np.abs(getattr(st, name).coeffs[:, [0, -1]])) == 0.0
        assert reality_defect(st.u) < 1e-12

    def test_mirror_symmetry_preserved(self):
        g = make_grid(32, 48)
        par = PhysicalParams(eps=0.5)
        uc = np.zeros(g.shape, complex)
        hc = np.zeros(g.shape, complex)
        wc = np.zeros(g.shape, complex)
        slot = {int(g.k_index[i]): i for i in range(g.Nx)}
        p1, p2 = sine(g.y, 1), sine(g.y, 2)
        for kk, amp in ((1, 0.01), (2, 0.007), (3, 0.004)):
            uc[slot[kk]] = 1j * amp * p2       # odd in x
            uc[slot[-kk]] = -1j * amp * p2
            hc[slot[kk]] = amp * p1            # even in x
            hc[slot[-kk]] = amp * p1
            wc[slot[kk]] = 0.5 * amp * p1
            wc[slot[-kk]] = 0.5 * amp * p1
        u = SpectralField(g, uc)
        ht = SpectralField(g, wc)
        pair = recover_div_free_from_curl(ht)
        st = bare_state(g, par, u=u, v=v_from_u(u, variant="exact_discrete"),
                        h=SpectralField(g, hc), ht=ht,
                        e=pair.first, f=pair.second)
        assert mirror_defect(st) == 0.0
        for _ in range(10):
            st = step_imex(st, 5e-4)
        assert mirror_defect(st) < 1e-10

    def test_step_determinism(self):
        g = make_grid(16, 32)
        par = PhysicalParams(eps=0.5)
        a = init_data_gevrey(InitialDataSpec(seed=7, s=4.0), g, par)
        b = init_data_gevrey(InitialDataSpec(seed=7, s=4.0), g, par)
        for _ in range(3):
            a = step_imex(a, 1e-3)
            b = step_imex(b, 1e-3)
        assert np.array_equal(a.u.coeffs, b.u.coeffs)
        assert np.array_equal(a.h.coeffs, b.h.coeffs)
        assert np.array_equal(a.p.coeffs, b.p.coeffs)


class TestRunLinear:
    def setup_method(self):
        self.grid = make_grid(32, 64)
        self.par = PhysicalParams(eps=0.5)
        self.weight = GevreyWeight(
            1.0, 4.0, LambdaSchedule("constant_rate", C=1.0, C_in=1.0,
                                     delta0=1.0))

    def test_zero_data_zero_trajectory(self):
        st = bare_state(self.grid, self.par)
        res = run_linear(st, self.par, T=0.005, dt=5e-4, weight=self.weight)
        assert not np.any(res.heat_energy)
        assert not np.any(res.wave_energy)

    def test_energies_monotone_even_with_shrinking_radius(self):
        st = init_data_gevrey(InitialDataSpec(seed=1, s=4.0), self.grid, self.par)
        res = run_linear(st, self.par, T=0.01, dt=1e-4, weight=self.weight)
        assert res.max_heat_violation <= 1e-12
        assert res.max_wave_violation <= 1e-12
        assert res.heat_energy[-1] < res.heat_energy[0]

    def test_wave_dissipation_bounded_by_initial_energy(self):
        st = init_data_gevrey(InitialDataSpec(seed=2, s=4.0), self.grid, self.par)
        res = run_linear(st, self.par, T=0.02, dt=2e-4, weight=self.weight)
        assert res.wave_dissipation <= res.wave_energy[0] * (1.0 + 1e-9)
        assert res.wave_dissipation > 0.0

    def test_heat_exact_propagator_order(self):
        g = self.grid
        k, m = 3, 2
        u0 = mode_field(g, k, 0.01 * sine(g.y, m))
        lam = -self.par.eps**2 * k**2 + discrete_eig(m, g.dy)
        frozen = GevreyWeight(1.0, 4.0, None)
        errs = []
        for dt in (1e-3, 5e-4, 2.5e-4):
            st = bare_state(g, self.par, u=u0)
            res = run_linear(st, self.par, T=0.02, dt=dt, weight=frozen)
            exact = u0.coeffs * np.exp(lam * 0.02)
            errs.append(np.max(np.abs(res.final_u.coeffs - exact)))
        assert 3.5 < errs[0] / errs[1] < 4.5
        assert 3.5 < errs[1] / errs[2] < 4.5


class TestRunFull:
    def test_zero_amplitude_all_zero(self):
        cfg = default_config(
            "eps", grid={"Nx": 16, "Ny": 32}, data={"amplitude": 0.0},
            gevrey={"s": 4.0, "schedule": "none"},
            time={"T": 0.002, "dt": 5e-4})
        res = run_full(cfg)
        assert res.status == "completed"
        assert not np.any(res.monitor_u)
        assert not np.any(res.monitor_dyh)

    def test_determinism_and_invariants(self):
        cfg = default_config(
            "eps", seed=11, grid={"Nx": 16, "Ny": 32},
            data={"amplitude": 0.02}, gevrey={"s": 4.0, "schedule": "none"},
            time={"T": 0.004, "dt": 5e-4})
        r1 = run_full(cfg)
        r2 = run_full(cfg)
        assert np.array_equal(r1.monitor_u, r2.monitor_u)
        assert np.array_equal(r1.final_state.u.coeffs, r2.final_state.u.coeffs)
        assert r1.status == "completed"
        assert np.max(r1.div_uv) < 1e-9
        assert np.max(r1.div_ef) < 1e-9
        assert np.max(r1.faraday) < 1e-9

    def test_blowup_reported_with_last_valid_state(self):
        cfg = default_config(
            "eps", grid={"Nx": 16, "Ny": 32}, data={"amplitude": 1e8},
            gevrey={"s": 10.0, "schedule": "none"},
            time={"T": 3e-10, "dt": 1e-10})
        res = run_full(cfg)
        assert res.status == "blowup"
        assert res.blowup_time == pytest.approx(1e-10)
        assert res.final_state.t == 0.0
        assert len(res.times) == 1

    def test_horizon_flag_nonfatal(self):
        cfg = default_config(
            "eps", grid={"Nx": 16, "Ny": 32}, data={"amplitude": 0.001},
            gevrey={"s": 4.0, "schedule": "constant_rate"},
            time={"T": 0.02, "dt": 1e-3})
        res = run_full(cfg)
        assert res.status == "completed"
        assert res.horizon_exceeded        # radius passes delta0/2 at t=1/64

    def test_recorder_stride(self):
        calls = []

        def rec(state, weight):
            calls.append(state.t)
            return state.t

        cfg = default_config(
            "eps", grid={"Nx": 16, "Ny": 32}, data={"amplitude": 0.01},
            gevrey={"s": 4.0, "schedule": "none"},
            time={"T": 0.006, "dt": 1e-3, "stride": 2})
        res = run_full(cfg, recorder=rec)
        assert res.reports == calls
        assert len(res.reports) == 1 + 3   # t=0 plus every 2nd of 6 steps
