"""Constraint-solve tests: recovery, vertical velocity, pressure.

Oracles: manufactured potentials with known closed forms, exact integrals,
and an independently assembled dense Leray solve for the eps = 1 case.
"""

import numpy as np
import pytest

from striplab.gevrey import GevreyWeight, gevrey_norm
from striplab.grid import (
    SpectralField,
    ddx,
    ddy,
    from_physical,
    make_grid,
    mode_field,
    reality_defect,
    trapz_y,
)
from striplab.recovery import (
    DivFreePair,
    curl,
    discrete_antiderivative,
    divergence,
    hydrostatic_pressure,
    interior_divergence_residual,
    pressure_projection_eps,
    recover_div_free_from_curl,
    top_wall_residual,
    v_from_u,
)


def rand_smooth_field(grid, rng, wall_zero=True):
    """Band-limited in x, low sine modes in y (walls vanish if asked)."""
    c = np.zeros(grid.shape, dtype=complex)
    profiles = [np.sin(m * np.pi * grid.y) for m in (1, 2, 3, 4)]
    if not wall_zero:
        profiles.append(np.cos(np.pi * grid.y))
    for slot in np.nonzero(grid.dealias_keep)[0]:
        amps = rng.standard_normal(len(profiles)) + 1j * rng.standard_normal(len(profiles))
        c[slot] = sum(a * p for a, p in zip(amps, profiles))
    phys = np.fft.ifft(c * grid.Nx, axis=0).real
    return from_physical(grid, phys)


class TestDiscreteAntiderivative:
    def test_rows_hold_exactly(self):
        g = make_grid(8, 20)
        rng = np.random.default_rng(0)
        rhs = rng.standard_normal(g.Ny + 2) + 1j * rng.standard_normal(g.Ny + 2)
        p = discrete_antiderivative(rhs, g.dy)
        assert p[0] == 0.0
        f = mode_field(g, 0, p)
        got = ddy(f).coeffs[0]
        scale = np.max(np.abs(rhs))
        # every row but the top one-sided row
        assert np.max(np.abs(got[:-1] - rhs[:-1])) < 1e-12 * scale

    def test_batched(self):
        g = make_grid(8, 16)
        rng = np.random.default_rng(1)
        rhs = rng.standard_normal((5, g.Ny + 2))
        p = discrete_antiderivative(rhs, g.dy)
        for i in range(5):
            assert np.allclose(p[i], discrete_antiderivative(rhs[i], g.dy))


class TestRecover:
    def test_zero(self):
        g = make_grid(16, 16)
        pair = recover_div_free_from_curl(mode_field(g, 1, np.zeros(g.Ny + 2)))
        for fld in (pair.first, pair.second, pair.potential):
            assert np.max(np.abs(fld.coeffs)) == 0.0

    def test_manufactured_sine_potential(self):
        # (d_yy - 1) sin(pi y) = -(1 + pi^2) sin(pi y), potential Dirichlet
        errs = []
        for ny in (32, 64):
            g = make_grid(8, ny)
            omega = mode_field(g, 1, -(1.0 + np.pi**2) * np.sin(np.pi * g.y))
            pair = recover_div_free_from_curl(omega)
            slot = np.nonzero(g.k_index == 1)[0][0]
            errs.append(np.max(np.abs(pair.potential.coeffs[slot] - np.sin(np.pi * g.y))))
            if ny == 64:
                assert np.allclose(pair.first.coeffs[slot],
                                   np.pi * np.cos(np.pi * g.y), atol=6e-3)
                assert np.allclose(pair.second.coeffs[slot],
                                   -1j * np.sin(np.pi * g.y), atol=6e-3)
        assert errs[0] < 1e-2
        assert 3.3 <= errs[0] / errs[1] <= 4.7

    def test_round_trip_identity(self):
        g = make_grid(16, 24)
        prof = np.sin(np.pi * g.y) + 0.3 * np.sin(2.0 * np.pi * g.y)
        pot = mode_field(g, 2, (0.7 - 0.2j) * prof, reality=True)
        first, second = ddy(pot), -ddx(pot)
        pair = recover_div_free_from_curl(curl(first, second))
        scale = np.max(np.abs(first.coeffs))
        assert np.max(np.abs(pair.first.coeffs - first.coeffs)) < 1e-10 * scale
        assert np.max(np.abs(pair.second.coeffs - second.coeffs)) < 1e-10 * scale
        assert np.max(np.abs(pair.potential.coeffs - pot.coeffs)) < 1e-10 * scale

    def test_round_trip_k0(self):
        # zero-mean horizontal component, Neumann-compatible
        g = make_grid(8, 24)
        e0 = mode_field(g, 0, np.cos(np.pi * g.y))
        zero = mode_field(g, 0, np.zeros(g.Ny + 2))
        pair = recover_div_free_from_curl(curl(e0, zero))
        assert np.max(np.abs(pair.first.coeffs[0] - np.cos(np.pi * g.y))) < 1e-12
        assert np.max(np.abs(pair.second.coeffs)) == 0.0

    def test_pair_structure(self):
        g = make_grid(16, 20)
        rng = np.random.default_rng(3)
        omega = rand_smooth_field(g, rng)
        pair = recover_div_free_from_curl(omega)
        assert isinstance(pair, DivFreePair)
        # second vanishes on the walls exactly
        assert np.max(np.abs(pair.second.coeffs[:, 0])) == 0.0
        assert np.max(np.abs(pair.second.coeffs[:, -1])) == 0.0
        # divergence-free for the discrete operators themselves
        assert interior_divergence_residual(pair.first, pair.second) < 1e-13
        # gradient relations: exact away from the k=0 top row
        dpot = ddy(pair.potential)
        s0 = np.nonzero(g.k_index == 0)[0][0]
        nz = np.arange(g.Nx) != s0
        scale = max(np.max(np.abs(pair.first.coeffs)), 1.0)
        assert np.max(np.abs(dpot.coeffs[nz] - pair.first.coeffs[nz])) < 1e-12 * scale
        assert np.max(np.abs(dpot.coeffs[s0, :-1] - pair.first.coeffs[s0, :-1])) \
            < 1e-12 * scale
        assert np.max(np.abs(ddx(pair.potential).coeffs + pair.second.coeffs)) \
            < 1e-12 * scale
        # potential anchored at the bottom wall
        assert np.max(np.abs(pair.potential.coeffs[:, 0])) < 1e-14 * scale

    def test_curl_reinserted_interior(self):
        g = make_grid(16, 32)
        rng = np.random.default_rng(4)
        omega = rand_smooth_field(g, rng)
        pair = recover_div_free_from_curl(omega)
        got = curl(pair.first, pair.second)
        scale = np.max(np.abs(omega.coeffs))
        diff = np.abs(got.coeffs[:, 1:-1] - omega.coeffs[:, 1:-1])
        assert np.max(diff) < 1e-9 * scale

    def test_norm_bounds_resolution_stable(self):
        # recovered pair gains one index over the curl; the constant is O(1)
        w_hi = GevreyWeight(delta0=0.4, s=3.0)
        w_lo = w_hi.shifted(-1.0)
        sups = []
        for ny in (32, 64):
            g = make_grid(16, ny)
            rng = np.random.default_rng(5)
            worst = worst_d = 0.0
            for _ in range(50):
                omega = rand_smooth_field(g, rng)
                pair = recover_div_free_from_curl(omega)
                num = np.hypot(gevrey_norm(pair.first, w_hi),
                               gevrey_norm(pair.second, w_hi))
                num_d = np.hypot(gevrey_norm(ddy(pair.first), w_hi),
                                 gevrey_norm(ddy(pair.second), w_hi))
                worst = max(worst, num / gevrey_norm(omega, w_lo))
                worst_d = max(worst_d, num_d / gevrey_norm(omega, w_hi))
            sups.append((worst, worst_d))
        for worst, worst_d in sups:
            assert worst < 3.0
            assert worst_d < 3.0
        assert sups[1][0] < sups[0][0] * 1.5
        assert sups[1][1] < sups[0][1] * 1.5

    def test_reality(self):
        g = make_grid(16, 20)
        omega = rand_smooth_field(g, np.random.default_rng(6))
        pair = recover_div_free_from_curl(omega)
        for fld in (pair.first, pair.second, pair.potential):
            assert fld.reality and reality_defect(fld) < 1e-11


class TestVFromU:
    def test_x_independent(self):
        g = make_grid(8, 16)
        u = mode_field(g, 0, np.sin(np.pi * g.y))
        for variant in ("trapezoid", "exact_discrete"):
            assert np.max(np.abs(v_from_u(u, variant).coeffs)) == 0.0

    def test_full_period_exact_integral(self):
        # v(1, y) = -i (1 - cos(2 pi y)) / (2 pi); flux over a full period
        # vanishes, so the top wall is clean
        errs = []
        for ny in (32, 64):
            g = make_grid(8, ny)
            u = mode_field(g, 1, np.sin(2.0 * np.pi * g.y))
            v = v_from_u(u)
            slot = np.nonzero(g.k_index == 1)[0][0]
            expect = -1j * (1.0 - np.cos(2.0 * np.pi * g.y)) / (2.0 * np.pi)
            errs.append(np.max(np.abs(v.coeffs[slot] - expect)))
            assert np.abs(v.coeffs[slot, 0]) == 0.0
            assert np.abs(v.coeffs[slot, -1]) < 1e-13
        assert errs[0] < 2e-3
        assert 3.5 <= errs[0] / errs[1] <= 4.5

    def test_nonzero_flux_reported_not_zeroed(self):
        g = make_grid(8, 64)
        u = mode_field(g, 1, np.sin(np.pi * g.y))
        v = v_from_u(u)
        slot = np.nonzero(g.k_index == 1)[0][0]
        # integral of sin(pi y) over the strip is 2/pi
        assert np.abs(v.coeffs[slot, -1]) == pytest.approx(2.0 / np.pi, abs=1e-3)
        assert top_wall_residual(v) == pytest.approx(2.0 / np.pi, abs=1e-3)

    def test_exact_discrete_interior_divergence(self):
        g = make_grid(16, 32)
        u = rand_smooth_field(g, np.random.default_rng(7))
        v_exact = v_from_u(u, "exact_discrete")
        v_trap = v_from_u(u, "trapezoid")
        assert interior_divergence_residual(u, v_exact) < 1e-13
        # the quadrature variant is only second-order accurate
        assert interior_divergence_residual(u, v_trap) > 1e-7
        assert np.abs(v_exact.coeffs[:, 0]).max() == 0.0

    def test_bad_variant(self):
        g = make_grid(8, 16)
        with pytest.raises(ValueError):
            v_from_u(mode_field(g, 1, np.zeros(18)), "simpson")

    def test_reality(self):
        g = make_grid(16, 16)
        u = rand_smooth_field(g, np.random.default_rng(8))
        for variant in ("trapezoid", "exact_discrete"):
            v = v_from_u(u, variant)
            assert v.reality and reality_defect(v) < 1e-11


def dense_leray_oracle(grid, ru, rv):
    """Independent eps = 1 projection: own stencils, dense solves."""
    n = grid.Ny + 2
    h = 2.0 * grid.dy
    D = np.zeros((n, n))
    for j in range(1, n - 1):
        D[j, j - 1], D[j, j + 1] = -1.0 / h, 1.0 / h
    D[0, :3] = np.array([-3.0, 4.0, -1.0]) / h
    D[-1, -3:] = np.array([1.0, -4.0, 3.0]) / h
    DD = D @ D
    p = np.zeros_like(ru.coeffs)
    for slot, k in enumerate(grid.k):
        if k == 0.0:
            continue
        M = DD - k * k * np.eye(n)
        M[0, :] = D[0, :]
        M[-1, :] = D[-1, :]
        b = 1j * k * ru.coeffs[slot] + D @ rv.coeffs[slot]
        b[0] = rv.coeffs[slot, 0]
        b[-1] = rv.coeffs[slot, -1]
        p[slot] = np.linalg.solve(M, b)
    return p


class TestProjection:
    def test_manufactured_analytic_gradient(self):
        errs = []
        for ny in (32, 64):
            g = make_grid(16, ny)
            X, Y = np.meshgrid(g.x, g.y, indexing="ij")
            pstar = from_physical(g, np.cos(X) * np.cos(np.pi * Y))
            ru = ddx(pstar)
            rv = from_physical(g, -np.pi * np.cos(X) * np.sin(np.pi * Y))
            p, du, dv = pressure_projection_eps(ru, rv, eps=0.3)
            errs.append(np.max(np.abs(p.coeffs - pstar.coeffs)))
            if ny == 64:
                assert np.max(np.abs(du.coeffs)) < 5e-3
                assert np.max(np.abs(dv.coeffs)) < 5e-3 / 0.3**2
        assert errs[0] < 5e-2
        assert 3.3 <= errs[0] / errs[1] <= 4.7

    def test_manufactured_discrete_gradient_exact(self):
        g = make_grid(16, 32)
        X, Y = np.meshgrid(g.x, g.y, indexing="ij")
        pstar = from_physical(g, np.cos(X) * np.cos(np.pi * Y))
        ru, rv = ddx(pstar), ddy(pstar)
        p, du, dv = pressure_projection_eps(ru, rv, eps=0.25)
        scale = np.max(np.abs(pstar.coeffs))
        assert np.max(np.abs(p.coeffs - pstar.coeffs)) < 1e-10 * scale
        assert np.max(np.abs(du.coeffs)) < 1e-10 * scale
        assert np.max(np.abs(dv.coeffs)) < 1e-10 * scale / 0.25**2

    def test_eps_one_matches_dense_oracle(self):
        g = make_grid(16, 24)
        rng = np.random.default_rng(9)
        ru = rand_smooth_field(g, rng, wall_zero=False)
        rv = rand_smooth_field(g, rng)
        p, du, dv = pressure_projection_eps(ru, rv, eps=1.0)
        expect = dense_leray_oracle(g, ru, rv)
        s0 = np.nonzero(g.k_index == 0)[0][0]
        nz = np.arange(g.Nx) != s0
        scale = np.max(np.abs(expect))
        assert np.max(np.abs(p.coeffs[nz] - expect[nz])) < 1e-9 * scale

    def test_divergence_of_corrected_tendencies(self):
        # dv is a difference of eps^-2-sized terms, so the attainable
        # residual scales like eps^-2 machine epsilons; all values sit far
        # below the 1e-9 per-step gate
        g = make_grid(16, 32)
        rng = np.random.default_rng(10)
        for eps, bound in ((1.0, 1e-12), (0.3, 1e-12), (0.05, 2e-10), (0.025, 1e-9)):
            ru = rand_smooth_field(g, rng, wall_zero=False)
            rv = rand_smooth_field(g, rng)
            _, du, dv = pressure_projection_eps(ru, rv, eps)
            assert interior_divergence_residual(du, dv) < bound

    def test_idempotent(self):
        g = make_grid(16, 24)
        rng = np.random.default_rng(11)
        ru = rand_smooth_field(g, rng, wall_zero=False)
        rv = rand_smooth_field(g, rng)
        eps = 0.2
        p, du, dv = pressure_projection_eps(ru, rv, eps)
        rv2 = dv.copy()
        rv2.coeffs = dv.coeffs * eps**2
        p2, du2, dv2 = pressure_projection_eps(du, rv2, eps)
        scale = max(np.max(np.abs(du.coeffs)), np.max(np.abs(p.coeffs)))
        assert np.max(np.abs(p2.coeffs)) < 1e-10 * scale
        assert np.max(np.abs(du2.coeffs - du.coeffs)) < 1e-10 * scale
        assert np.max(np.abs(dv2.coeffs - dv.coeffs)) < 1e-10 * scale / eps**2

    def test_compatible_input_untouched(self):
        g = make_grid(16, 24)
        omega = rand_smooth_field(g, np.random.default_rng(12))
        pair = recover_div_free_from_curl(omega)
        eps = 0.4
        ru = pair.first
        rv = pair.second.copy()
        rv.coeffs = pair.second.coeffs * eps**2
        p, du, dv = pressure_projection_eps(ru, rv, eps)
        scale = np.max(np.abs(ru.coeffs))
        # rhs is zero only to round-off (eps^2 scaling round trip), so the
        # result is unchanged to solver noise, not bitwise
        assert np.max(np.abs(p.coeffs)) < 1e-12 * scale
        assert np.max(np.abs(du.coeffs - ru.coeffs)) < 1e-12 * scale
        assert np.max(np.abs(dv.coeffs - pair.second.coeffs)) < 1e-12 * scale

    def test_wall_rows_preserve_zero_vertical_tendency(self):
        g = make_grid(16, 24)
        rng = np.random.default_rng(13)
        ru = rand_smooth_field(g, rng, wall_zero=False)
        rv = rand_smooth_field(g, rng)  # zero walls
        _, _, dv = pressure_projection_eps(ru, rv, 0.15)
        s0 = np.nonzero(g.k_index == 0)[0][0]
        nz = np.arange(g.Nx) != s0
        scale = np.max(np.abs(rv.coeffs)) / 0.15**2
        assert np.max(np.abs(dv.coeffs[nz][:, [0, -1]])) < 1e-10 * scale

    def test_k0_column_wall_rows_and_compatibility(self):
        # cubic profile: the over-determined top row cannot be satisfied,
        # the defect stays visible in the pressure trace, and the vertical
        # tendency (a BC row at the walls) is zero everywhere
        g = make_grid(8, 16)
        ru = mode_field(g, 0, np.zeros(g.Ny + 2))
        rv = mode_field(g, 0, (g.y**3).astype(complex))
        p, _, dv = pressure_projection_eps(ru, rv, 0.5)
        assert np.max(np.abs(dv.coeffs[0])) < 1e-12
        defect = np.abs(ddy(p).coeffs[0, -1] - rv.coeffs[0, -1])
        assert defect > 1e-6

    def test_eps_validation(self):
        g = make_grid(8, 16)
        z = mode_field(g, 0, np.zeros(g.Ny + 2))
        with pytest.raises(ValueError):
            pressure_projection_eps(z, z, 0.0)
        with pytest.raises(ValueError):
            pressure_projection_eps(z, z, 1.5)

    def test_reality(self):
        g = make_grid(16, 20)
        rng = np.random.default_rng(14)
        ru = rand_smooth_field(g, rng, wall_zero=False)
        rv = rand_smooth_field(g, rng)
        p, du, dv = pressure_projection_eps(ru, rv, 0.3)
        for fld in (p, du, dv):
            assert fld.reality and reality_defect(fld) < 1e-10


class TestHydrostaticPressure:
    def test_all_zero(self):
        g = make_grid(8, 16)
        z = mode_field(g, 0, np.zeros(g.Ny + 2))
        p = hydrostatic_pressure(z, z, z, z, alpha=1.0)
        assert np.max(np.abs(p.coeffs)) == 0.0

    def test_pure_e_closed_form(self):
        # dy p = -alpha sin(pi y)  =>  p = -alpha (1 - cos(pi y)) / pi
        alpha = 0.7
        errs = []
        for ny in (32, 64):
            g = make_grid(8, ny)
            z = mode_field(g, 1, np.zeros(g.Ny + 2))
            e = mode_field(g, 1, np.sin(np.pi * g.y))
            p = hydrostatic_pressure(e, z, z, z, alpha=alpha)
            slot = np.nonzero(g.k_index == 1)[0][0]
            expect = -alpha * (1.0 - np.cos(np.pi * g.y)) / np.pi
            errs.append(np.max(np.abs(p.coeffs[slot] - expect)))
            assert p.coeffs[slot, 0] == 0.0  # no surface part without tendency
        assert errs[0] < 1e-3
        assert 3.5 <= errs[0] / errs[1] <= 4.5

    def test_linear_in_alpha(self):
        g = make_grid(16, 16)
        rng = np.random.default_rng(15)
        e, v, h = (rand_smooth_field(g, rng) for _ in range(3))
        f = rand_smooth_field(g, rng)
        p1 = hydrostatic_pressure(e, f, v, h, alpha=0.5)
        p2 = hydrostatic_pressure(e, f, v, h, alpha=1.0)
        assert np.allclose(2.0 * p1.coeffs, p2.coeffs, rtol=1e-12, atol=1e-14)

    def test_surface_closure_kills_flux_drift(self):
        g = make_grid(16, 32)
        rng = np.random.default_rng(16)
        e, v, h = (rand_smooth_field(g, rng) for _ in range(3))
        f = rand_smooth_field(g, rng)
        tend = rand_smooth_field(g, rng, wall_zero=False)
        p = hydrostatic_pressure(e, f, v, h, alpha=1.3, u_tendency=tend)
        # flux of the corrected tendency R - ik p vanishes per mode k != 0
        corrected = tend.coeffs - (1j * g.k)[:, None] * p.coeffs
        flux = trapz_y(corrected, g.dy, axis=-1)
        s0 = np.nonzero(g.k_index == 0)[0][0]
        nz = np.arange(g.Nx) != s0
        scale = np.max(np.abs(tend.coeffs))
        assert np.max(np.abs(flux[nz])) < 1e-12 * scale
        # the k = 0 surface part stays pinned to zero
        assert p.coeffs[s0, 0] == 0.0

    def test_reality(self):
        g = make_grid(16, 16)
        rng = np.random.default_rng(17)
        e, f, v, h = (rand_smooth_field(g, rng) for _ in range(4))
        tend = rand_smooth_field(g, rng, wall_zero=False)
        p = hydrostatic_pressure(e, f, v, h, 0.9, u_tendency=tend)
        assert p.reality and reality_defect(p) < 1e-10
