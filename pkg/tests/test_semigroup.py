import numpy as np
import pytest
from hypothesis import given, strategies as st

from hydrostokes.datagen import random_smooth, random_solenoidal, taylor_green
from hydrostokes.domain import Domain
from hydrostokes.field import PhysicalField, norm_inf_p
from hydrostokes.hops import horizontal_derivative
from hydrostokes.semigroup import StokesSemigroup, loglog_fit

from conftest import field_of

D = Domain(Nx=16, Ny=16, Nz=17)
S = StokesSemigroup(D)
X, Y, Z = D.mesh()


def rand(seed, ncomp=2):
    return PhysicalField(random_smooth(D, np.random.default_rng(seed), ncomp), D)


class TestApply:
    def test_constant(self):
        a = field_of(D, 1.5 + 0 * Z, -2 + 0 * Z)
        for t in (0.0, 0.3, 5.0):
            np.testing.assert_allclose(S.apply(a, t).data, a.data, atol=1e-13)

    def test_product_eigenvalue(self):
        a = field_of(D, np.sin(X) * np.cos(np.pi * Z))
        t = 0.07
        np.testing.assert_allclose(S.apply(a, t).data, np.exp(-t * (1 + np.pi**2)) * a.data, atol=1e-14)

    @pytest.mark.parametrize("t,s", [(0.1, 0.1), (0.1, 0.3), (0.3, 0.1), (0.3, 0.3)])
    def test_exponential_law(self, t, s):
        c = D.forward(rand(1).data)
        np.testing.assert_allclose(S.apply_coeffs(S.apply_coeffs(c, t), s), S.apply_coeffs(c, t + s),
                                   rtol=1e-13, atol=1e-16)

    def test_negative_time(self):
        with pytest.raises(ValueError):
            S.apply(rand(0), -0.1)

    @given(st.integers(0, 2**32 - 1), st.sampled_from([1.0, np.inf]), st.sampled_from([0.01, 0.1, 1.0]))
    def test_contraction(self, seed, p, t):
        a = PhysicalField(random_smooth(D, np.random.default_rng(seed), 1, bandlimit=3, nz_modes=3), D)
        assert norm_inf_p(S.apply(a, t), p) <= norm_inf_p(a, p) * (1 + 1e-6)

    def test_basis_element_is_eigenvector(self):
        c = np.zeros((1,) + D.spectral_shape, dtype=complex)
        c[0, 3, 2, 4] = 1.0
        out = S.apply_coeffs(c, 0.01)
        assert np.count_nonzero(out) == 1
        assert out[0, 3, 2, 4] == pytest.approx(np.exp(-0.01 * (13 + 16 * np.pi**2)))

    def test_commutes_with_horizontal_derivative(self):
        a = rand(2, 1)
        for i in (1, 2):
            lhs = S.apply(horizontal_derivative(a, i), 0.05).data
            rhs = horizontal_derivative(S.apply(a, 0.05), i).data
            np.testing.assert_allclose(lhs, rhs, atol=1e-13)


class TestComposites:
    def test_grad_of_constant(self):
        np.testing.assert_allclose(S.apply_grad(field_of(D, 3 + 0 * Z), 0.1).data, 0.0, atol=1e-13)

    def test_grad_of_sine(self):
        g = S.apply_grad(field_of(D, np.sin(X) + 0 * Z), 0.2).data
        np.testing.assert_allclose(g[0], np.exp(-0.2) * np.broadcast_to(np.cos(X), D.shape), atol=1e-14)
        np.testing.assert_allclose(g[1:], 0.0, atol=1e-14)

    def test_grad_requires_positive_time(self):
        with pytest.raises(ValueError):
            S.apply_grad(rand(0), 0.0)

    def test_projected_fraclap_identity_power(self):
        a = random_solenoidal(D, np.random.default_rng(3))
        np.testing.assert_allclose(S.apply_projected_fraclap(a, 0.0, 0.1).data, S.apply(a, 0.1).data,
                                   atol=1e-13)

    def test_projected_fraclap_kills_gradients(self):
        g = field_of(D, np.cos(X) * np.sin(Y) + 0 * Z, np.sin(X) * np.cos(Y) + 0 * Z)  # grad of sin x sin y
        np.testing.assert_allclose(S.apply_projected_fraclap(g, 0.0, 0.1).data, 0.0, atol=1e-14)

    def test_div_of_constant_tensor(self):
        t = field_of(D, *[c + 0 * Z for c in (1.0, 2.0, -1.0, 0.5)])
        np.testing.assert_allclose(S.apply_div_h(t, 0.1).data, 0.0, atol=1e-14)

    def test_div_of_taylor_green_product(self):
        v = taylor_green(D).data
        tensor = PhysicalField(np.stack([v[0] * v[0], v[0] * v[1], v[1] * v[0], v[1] * v[1]]), D)
        np.testing.assert_allclose(S.apply_div_h(tensor, 0.05).data, 0.0, atol=1e-13)
        assert np.abs(S.apply_div_h(tensor, 0.05, project=False).data).max() > 0.1

    def test_div_needs_four_components(self):
        with pytest.raises(ValueError):
            S.apply_div_h(rand(0), 0.1)

    def test_dz_rl_alpha_one(self):
        d = Domain(Nx=4, Ny=4, Nz=1025)
        s = StokesSemigroup(d)
        _, _, z = d.mesh()
        f = field_of(d, np.sin(3 * z) + z * z)
        np.testing.assert_allclose(s.apply_dz_rl(f, 1.0, 0.01).data, s.apply(f, 0.01).data, atol=1e-5)

    def test_dz_rl_alpha_zero(self):
        d = Domain(Nx=4, Ny=4, Nz=129)
        s = StokesSemigroup(d)
        _, _, z = d.mesh()
        f = field_of(d, np.sin(np.pi * z) / np.pi)
        expected = np.exp(-0.02 * np.pi**2) * np.broadcast_to(np.cos(np.pi * z), d.shape)
        np.testing.assert_allclose(s.apply_dz(f, 0.02).data[0], expected, atol=1e-12)

    def test_dz_rl_range(self):
        with pytest.raises(ValueError):
            S.apply_dz_rl(rand(0), 1.5, 0.1)


class TestL1LqSmoothing:
    t = np.logspace(-4, -2, 7)

    def test_q_one_bounded(self):
        a = rand(4, 1)
        fit = S.smoothing_l1_lq(a, self.t, 1.0)
        assert np.all(fit.ratio <= 1 + 1e-6)
        assert abs(fit.fitted_exponent) < 0.05

    def test_constant_ratio(self):
        fit = S.smoothing_l1_lq(field_of(D, 2 + 0 * Z), self.t, np.inf)
        np.testing.assert_allclose(fit.ratio, fit.ratio[0], rtol=1e-12)
        assert fit.candidates == {"full": -1.0, "half": -0.5}

    def test_reports_both_candidates(self):
        fit = S.smoothing_l1_lq(rand(5, 1), self.t, 2.0)
        assert set(fit.deviations()) == {"full", "half"}


@given(st.floats(-2, 2), st.floats(0.1, 10))
def test_loglog_fit_recovers_power(p, c):
    t = np.logspace(-4, -1, 8)
    fp, fc, r2 = loglog_fit(t, c * t**p)
    assert fp == pytest.approx(p, abs=1e-10)
    assert fc == pytest.approx(c, rel=1e-9)
    assert r2 == pytest.approx(1.0, abs=1e-12) or abs(p) < 1e-12
