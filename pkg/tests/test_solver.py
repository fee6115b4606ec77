import math
import warnings

import numpy as np
import pytest
from hypothesis import given, strategies as st

from hydrostokes.datagen import random_solenoidal, rough_split, taylor_green, z_profile
from hydrostokes.domain import Domain
from hydrostokes.field import PhysicalField
from hydrostokes.hops import helmholtz_project
from hydrostokes.semigroup import StokesSemigroup
from hydrostokes.solver import (
    BlowUpError,
    DuhamelStepper,
    NonConvergenceError,
    _x0,
    bilinear,
    calibrate_c_star,
    continue_global,
    duhamel_step,
    empirical_existence_time,
    etd_solve,
    gauss_legendre_unit,
    intersection_threshold,
    majorant_recursion,
    lifespan_bound,
    lifespan_estimate,
    nonlinearity,
    phi_functions,
    picard_solve,
    read_checkpoint,
    reconstruct_w,
    recover_pressure_grad,
    recursion_threshold,
    write_checkpoint,
)

from conftest import field_of

D = Domain(Nx=16, Ny=16, Nz=17)
X, Y, Z = D.mesh()


class TestVerticalVelocity:
    def test_linear_profile(self):
        w = reconstruct_w(field_of(D, np.sin(X) + 0 * Z, 0 * Z)).data[0]
        np.testing.assert_allclose(w, np.broadcast_to((1 - Z) * np.cos(X), D.shape), atol=1e-14)

    def test_cosine_profile(self):
        w = reconstruct_w(field_of(D, np.sin(X) * np.cos(np.pi * Z), 0 * Z)).data[0]
        np.testing.assert_allclose(w, np.broadcast_to(-np.cos(X) * np.sin(np.pi * Z) / np.pi, D.shape),
                                   atol=1e-14)
        assert np.abs(w[..., [0, -1]]).max() < 1e-14

    def test_taylor_green(self):
        assert np.abs(reconstruct_w(taylor_green(D)).data).max() < 1e-14


class TestNonlinearity:
    def test_constant(self):
        assert np.abs(nonlinearity(field_of(D, 1 + 0 * Z, 2 + 0 * Z)).data).max() < 1e-13

    def test_two_dimensional_advection(self):
        # streamfunction psi = sin x sin 2y + cos 2x: v = (d_y psi, -d_x psi)
        v1 = 2 * np.sin(X) * np.cos(2 * Y) + 0 * Z
        v2 = -(np.cos(X) * np.sin(2 * Y) - 2 * np.sin(2 * X)) + 0 * Z
        v = field_of(D, v1, v2)
        dx = lambda f: np.real(np.fft.ifft(1j * np.fft.fftfreq(16, 1 / 16)[:, None, None] * np.fft.fft(f, axis=0), axis=0))
        dy = lambda f: np.real(np.fft.ifft(1j * np.fft.fftfreq(16, 1 / 16)[None, :, None] * np.fft.fft(f, axis=1), axis=1))
        adv = np.stack([v.data[0] * dx(v.data[i]) + v.data[1] * dy(v.data[i]) for i in range(2)])
        np.testing.assert_allclose(nonlinearity(v).data, adv, atol=1e-10)

    def test_taylor_green_projects_to_zero(self):
        assert np.abs(helmholtz_project(nonlinearity(taylor_green(D))).data).max() < 1e-10

    def test_bilinear_is_symmetric_form_of_nonlinearity(self):
        v = random_solenoidal(D, np.random.default_rng(0))
        np.testing.assert_allclose(bilinear(v, v).data, nonlinearity(v).data, atol=1e-14)


class TestPressure:
    def test_z_only(self):
        assert np.abs(recover_pressure_grad(z_profile(D)).data).max() < 1e-14

    def test_taylor_green(self):
        g = recover_pressure_grad(taylor_green(D)).data
        np.testing.assert_allclose(g[0], np.broadcast_to(0.5 * np.sin(2 * X) + 0 * Y, D.shape), atol=1e-13)
        np.testing.assert_allclose(g[1], np.broadcast_to(0.5 * np.sin(2 * Y) + 0 * X, D.shape), atol=1e-13)

    def test_z_independent(self):
        g = recover_pressure_grad(random_solenoidal(D, np.random.default_rng(1))).data
        assert np.var(g, axis=-1).max() < 1e-12


class TestQuadrature:
    @given(st.integers(1, 6))
    def test_gauss_nodes(self, n):
        th = gauss_legendre_unit(n)
        assert np.all((th > 0) & (th < 1)) and np.all(np.diff(th) > 0)

    def test_phi_functions(self):
        z = np.array([-1e-8, -0.5, -3.0, -50.0])
        e, p1, p2 = phi_functions(z, 2)
        np.testing.assert_allclose(e, np.exp(z))
        np.testing.assert_allclose(p1, np.expm1(z) / z, rtol=1e-12)
        np.testing.assert_allclose(p2, (np.expm1(z) - z) / z**2, rtol=1e-7)

    def test_step_zero_forcing(self):
        a = z_profile(D)
        zero = [a * 0.0] * 3
        out = duhamel_step(a, zero, 0.1)
        np.testing.assert_allclose(out.data, StokesSemigroup(D).apply(a, 0.1).data, atol=1e-15)

    def test_step_taylor_green(self):
        a = taylor_green(D)
        forcing = [helmholtz_project(nonlinearity(a * math.exp(-2 * 0.1 * th))) for th in gauss_legendre_unit(3)]
        out = duhamel_step(a, forcing, 0.1)
        np.testing.assert_allclose(out.data, math.exp(-0.2) * a.data, atol=1e-12)

    @pytest.mark.parametrize("n_quad", [1, 2, 3])
    def test_step_order(self, n_quad):
        g = field_of(D, np.sin(X) * np.cos(np.pi * Z), 0 * Z)
        lam = 1 + np.pi**2
        zero = g * 0.0
        defects = []
        for delta in (0.2, 0.1):
            forcing = [g * math.cos(delta * th) for th in gauss_legendre_unit(n_quad)]
            exact = (lam * math.cos(delta) + math.sin(delta) - lam * math.exp(-lam * delta)) / (lam**2 + 1)
            out = duhamel_step(zero, forcing, delta)
            defects.append(np.abs(out.data + exact * g.data).max())
        assert defects[0] / defects[1] > 0.75 * 2 ** (n_quad + 1)

    def test_bad_arguments(self):
        with pytest.raises(ValueError):
            DuhamelStepper(D, 0.0)
        with pytest.raises(ValueError):
            duhamel_step(z_profile(D), [z_profile(D)], 0.1, n_quad=3)


SMALL = Domain(Nx=8, Ny=8, Nz=9)


class TestPicard:
    def test_z_only(self):
        a = z_profile(SMALL)
        sol, trace = picard_solve(a, 0.5)
        assert trace.converged and trace.sweeps == 1
        np.testing.assert_allclose(sol.final.data, StokesSemigroup(SMALL).apply(a, 0.5).data, atol=1e-12)

    def test_taylor_green(self):
        a = taylor_green(SMALL)
        sol, trace = picard_solve(a, 0.5)
        assert trace.sweeps == 1
        for t, snap in zip(sol.times, sol.snapshots):
            np.testing.assert_allclose(snap, math.exp(-2 * t) * a.data, atol=1e-12)

    def test_contraction_and_constraint(self):
        a = random_solenoidal(SMALL, np.random.default_rng(5), amplitude=0.1)
        sol, trace = picard_solve(a, 0.5)
        assert trace.converged
        ratios = [r for r in trace.contraction[2:] if np.isfinite(r)]
        assert ratios and max(ratios) < 0.9
        assert sol.constraint_residual() < 1e-10
        assert [row["m"] for row in trace.rows()] == list(range(trace.sweeps + 1))

    def test_quadrature_refinement_converges(self):
        a = random_solenoidal(SMALL, np.random.default_rng(6), amplitude=0.3, bandlimit=2, nz_modes=2)
        finals = [picard_solve(a, 0.5, n_steps=n, atol=1e-13, rtol=1e-13)[0].final.data for n in (2, 4, 8, 32)]
        errs = [np.abs(f - finals[-1]).max() for f in finals[:-1]]
        assert errs[0] > errs[1] > errs[2]
        assert errs[0] / errs[1] > 8 and errs[1] / errs[2] > 8

    def test_matches_etd(self):
        a = random_solenoidal(SMALL, np.random.default_rng(7), amplitude=0.1)
        p, _ = picard_solve(a, 0.5, dt=0.05)
        e = etd_solve(a, 0.5, 0.005, save_every=10)
        np.testing.assert_allclose(p.snapshots, e.snapshots, atol=1e-5)

    def test_divergence_detected(self):
        a1, a2 = rough_split(SMALL, a2_amplitude=200.0, seed=1)
        with pytest.raises(NonConvergenceError) as exc:
            with warnings.catch_warnings():
                warnings.simplefilter("ignore")
                picard_solve(a1 + a2, 0.5, M_sweeps=40)
        assert exc.value.trace.sweeps >= 1

    def test_rejects_bad_data(self):
        with pytest.raises(ValueError):
            picard_solve(field_of(SMALL, np.sin(SMALL.mesh()[0]) + 0 * SMALL.mesh()[2], 0 * SMALL.mesh()[2]), 0.1)
        dn = Domain(Nx=8, Ny=8, Nz=9, bc="DirichletNeumann")
        with pytest.raises(ValueError):
            picard_solve(PhysicalField(np.zeros((2,) + dn.shape), dn), 0.1)
        with pytest.raises(ValueError):
            picard_solve(z_profile(SMALL), -1.0)


class TestETD:
    def test_z_only(self):
        a = z_profile(SMALL)
        sol = etd_solve(a, 0.5, 0.05)
        np.testing.assert_allclose(sol.final.data, StokesSemigroup(SMALL).apply(a, 0.5).data, atol=1e-10)

    def test_second_order(self):
        a = random_solenoidal(SMALL, np.random.default_rng(2), amplitude=0.3, bandlimit=2, nz_modes=2)
        ref = etd_solve(a, 0.5, 1 / 512).final.data
        errs = [np.abs(etd_solve(a, 0.5, dt).final.data - ref).max() for dt in (1 / 16, 1 / 32)]
        assert math.log2(errs[0] / errs[1]) == pytest.approx(2.0, abs=0.3)

    def test_blow_up(self):
        b = random_solenoidal(SMALL, np.random.default_rng(2), amplitude=1e4, bandlimit=3)
        with np.errstate(all="ignore"), pytest.raises(BlowUpError) as exc:
            etd_solve(b, 5.0, 0.1)
        assert exc.value.solution.times[-1] == exc.value.last_time

    def test_continue_global(self):
        a = random_solenoidal(SMALL, np.random.default_rng(3), amplitude=0.1)
        sol, sups = continue_global(a, 2.0, 0.05, window=1.0)
        assert len(sups) == 2 and sups[1] <= sups[0]


class TestRecursion:
    def test_zero_eps(self):
        r = majorant_recursion(1.0, 0.0, m_max=100)
        assert r.x0 == 0.0 and np.all(r.K == 0) and np.all(r.H == 1.0)

    def test_reference_case(self):
        r = majorant_recursion(1.0, 0.01)
        assert r.bounded and len(r.H) == 10001 and r.H.max() <= 2.0
        # the fixed-point equation for x0 has no root at this eps
        assert r.x0 is None and 0.01 > intersection_threshold(1.0, 1.0)

    def test_x0_monotone(self):
        eps = np.linspace(0.0, intersection_threshold(1.0, 1.0), 40)
        xs = [_x0(e, 1.0, 1.0) for e in eps]
        assert all(x is not None for x in xs)
        assert np.all(np.diff(xs) >= 0)

    @given(st.floats(1e-6, 0.009))
    def test_x0_is_root(self, eps):
        x = _x0(eps, 1.0, 1.0)
        assert eps + math.sqrt(2.0) * x**1.5 + x / 2 == pytest.approx(x, rel=1e-9)

    def test_threshold(self):
        thr = recursion_threshold(1.0, 1.0, 1.0, m_max=2000)
        assert majorant_recursion(1.0, thr, m_max=2000).bounded
        assert not majorant_recursion(1.0, thr * 1.01, m_max=2000).bounded

    def test_invalid(self):
        with pytest.raises(ValueError):
            majorant_recursion(0.0, 0.1)
        with pytest.raises(ValueError):
            majorant_recursion(1.0, -0.1)


class TestLifespan:
    def test_literal_examples(self):
        assert lifespan_bound(0.5, 0.25, 1.0) == pytest.approx(256.0)
        assert lifespan_bound(2.0, 0.25, 1.0) == 1.0
        assert lifespan_bound(2.0, 0.25, 1.0, form="max") == pytest.approx(2.0**-8)

    def test_mu_range(self):
        with pytest.raises(ValueError):
            lifespan_bound(1.0, 0.5, 1.0)

    @given(st.floats(0.1, 100), st.floats(1e-4, 1.0), st.floats(0.0, 0.45))
    def test_calibration_round_trip(self, triple, T, mu):
        c = calibrate_c_star(triple, T, mu)
        assert lifespan_bound(triple, mu, c, form="max") == pytest.approx(T, rel=1e-9)

    def test_monotone_in_scale(self):
        bounds = [lifespan_bound(lam * 3.0, 0.25, 1.0, form="max") for lam in (1, 2, 4, 8)]
        assert np.all(np.diff(bounds) < 0)

    def test_estimate_runs(self):
        a = random_solenoidal(SMALL, np.random.default_rng(0), amplitude=0.1)
        res = lifespan_estimate(a, 0.25, 1.0, T_cap=0.2, t_grid=[1e-3, 1e-1])
        assert res.T_run == 0.2 and res.converged

    def test_empirical_time(self):
        a = random_solenoidal(SMALL, np.random.default_rng(1), amplitude=0.1)
        assert empirical_existence_time(a, [0.1, 0.2], n_steps=4) == 0.2


class TestCheckpoint:
    def test_round_trip(self, tmp_path):
        a = random_solenoidal(SMALL, np.random.default_rng(0))
        write_checkpoint(tmp_path / "c.chk", a, 0.25)
        b, t = read_checkpoint(tmp_path / "c.chk")
        assert t == 0.25 and b.domain == a.domain
        np.testing.assert_array_equal(a.data, b.data)

    def test_corrupt(self, tmp_path):
        a = z_profile(SMALL)
        p = tmp_path / "c.chk"
        write_checkpoint(p, a, 0.0)
        raw = p.read_bytes()
        p.write_bytes(b"XXXX" + raw[4:])
        with pytest.raises(ValueError, match="magic"):
            read_checkpoint(p)
        p.write_bytes(raw[:-8])
        with pytest.raises(ValueError, match="size"):
            read_checkpoint(p)
        p.write_bytes(raw[:10])
        with pytest.raises(ValueError, match="truncated"):
            read_checkpoint(p)
