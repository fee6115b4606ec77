import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy.special import gamma

from hydrostokes.domain import trapezoid_weights
from hydrostokes.vcalc import (
    VerticalProfile,
    adjoint_rl,
    caputo,
    caputo_at,
    derivative_of_heat,
    heat_of_derivative,
    heat_vertical,
    make_admissible,
    periodized_heat_oracle,
    profile_from_function,
    riemann_liouville,
    smoothing_rl,
)
from hydrostokes.verify import local_rl_caputo_sides, random_admissible_profile

N = 1025


def prof(func, n=N, z0=0.0, z1=1.0):
    return profile_from_function(func, n, z0, z1)


def smooth_random(seed, n=N, vanish_at_bottom=False):
    rng = np.random.default_rng(seed)
    a = rng.standard_normal(5)

    def g(z):
        out = sum(c * np.cos((k + 1) * z + k) for k, c in enumerate(a))
        return out - (sum(c * np.cos(k) for k, c in enumerate(a)) if vanish_at_bottom else 0.0)

    return prof(g, n)


class TestRiemannLiouville:
    def test_alpha_one(self):
        f = prof(lambda z: np.ones_like(z))
        np.testing.assert_allclose(riemann_liouville(f, 1.0).values, f.z, atol=1e-14)

    def test_alpha_half(self):
        f = prof(lambda z: np.ones_like(z))
        np.testing.assert_allclose(riemann_liouville(f, 0.5).values, 2 * np.sqrt(f.z / np.pi), atol=1e-13)

    def test_alpha_zero_identity(self):
        f = smooth_random(0)
        np.testing.assert_array_equal(riemann_liouville(f, 0.0).values, f.values)

    def test_negative_order(self):
        with pytest.raises(ValueError):
            riemann_liouville(smooth_random(0), -0.1)

    @given(st.integers(0, 2**32 - 1))
    def test_semigroup_law(self, seed):
        f = smooth_random(seed, vanish_at_bottom=True)
        twice = riemann_liouville(riemann_liouville(f, 0.5), 0.5).values
        np.testing.assert_allclose(twice, riemann_liouville(f, 1.0).values, atol=1e-6 * max(1, np.abs(f.values).max()))

    def test_shifted_interval(self):
        f = prof(lambda z: np.ones_like(z), z0=2.0, z1=3.0)
        np.testing.assert_allclose(riemann_liouville(f, 0.5).values, 2 * np.sqrt((f.z - 2.0) / np.pi), atol=1e-13)


class TestAdjoint:
    def test_alpha_one(self):
        psi = prof(lambda z: np.ones_like(z))
        np.testing.assert_allclose(adjoint_rl(psi, 1.0).values, 1 - psi.z, atol=1e-14)

    def test_zero(self):
        assert np.all(adjoint_rl(prof(lambda z: 0 * z), 0.5).values == 0)

    def test_negative_order(self):
        with pytest.raises(ValueError):
            adjoint_rl(prof(lambda z: z), -1.0)

    @given(st.integers(0, 2**32 - 1))
    def test_duality(self, seed):
        n = 16385
        rng = np.random.default_rng(seed)
        a, b = rng.standard_normal(2)
        f = prof(lambda z: np.sin(2 * z + a) - np.sin(a) + z * z, n)
        psi = prof(lambda z: np.exp(b * z) * (1 - z), n)
        w = trapezoid_weights(n, f.dz)
        lhs = riemann_liouville(f, 0.5).values @ (psi.values * w)
        rhs = f.values @ (adjoint_rl(psi, 0.5).values * w)
        assert abs(lhs - rhs) < 1e-8


class TestCaputo:
    def test_constant(self):
        assert np.abs(caputo(prof(lambda z: 3 + 0 * z), 0.5).values).max() == 0.0

    def test_linear(self):
        f = prof(lambda z: z)
        np.testing.assert_allclose(caputo(f, 0.5).values, 2 * np.sqrt(f.z / np.pi), atol=1e-13)

    @pytest.mark.parametrize("alpha", [0.0, 1.0, -0.5, 1.5])
    def test_order_range(self, alpha):
        with pytest.raises(ValueError):
            caputo(prof(lambda z: z), alpha)

    def test_pointwise_matches_grid(self):
        f = random_admissible_profile(np.random.default_rng(0), 257)
        np.testing.assert_allclose(caputo_at(f, 0.3, f.z), caputo(f, 0.3).values, atol=1e-12)

    @given(st.integers(0, 2**32 - 1), st.sampled_from([0.25, 0.5, 0.75]), st.integers(2, 256))
    def test_local_hausdorff_young(self, seed, alpha, m):
        f = random_admissible_profile(np.random.default_rng(seed), 513)
        lhs, rhs = local_rl_caputo_sides(f, alpha, 2 * m)
        assert lhs <= rhs * (1 + 1e-6) + 1e-12


class TestHeatVertical:
    def test_constant_neumann(self):
        f = prof(lambda z: np.ones_like(z), 33)
        for t in (0.0, 0.1, 10.0):
            np.testing.assert_allclose(heat_vertical(f, t).values, 1.0, atol=1e-14)

    def test_eigenfunction(self):
        f = prof(lambda z: np.cos(np.pi * z), 33)
        out = heat_vertical(f, 0.1).values
        np.testing.assert_allclose(out, math.exp(-0.1 * np.pi**2) * f.values, atol=1e-14)
        assert math.exp(-0.1 * np.pi**2) == pytest.approx(0.37271, abs=1e-5)

    def test_dirichlet_neumann_eigenfunction(self):
        f = prof(lambda z: np.sin(1.5 * np.pi * z), 33)
        out = heat_vertical(f, 0.05, "DirichletNeumann").values
        np.testing.assert_allclose(out, math.exp(-0.05 * (1.5 * np.pi) ** 2) * f.values, atol=1e-14)

    def test_negative_time(self):
        with pytest.raises(ValueError):
            heat_vertical(prof(lambda z: z), -1e-3)

    def test_semigroup_law(self):
        f = smooth_random(4, 65)
        a = heat_vertical(heat_vertical(f, 0.1), 0.3).values
        np.testing.assert_allclose(a, heat_vertical(f, 0.4).values, atol=1e-13)

    @given(st.integers(0, 2**32 - 1), st.sampled_from([1.0, 2.0, np.inf]),
           st.sampled_from([0.01, 0.1, 1.0]), st.sampled_from(["Neumann", "DirichletNeumann"]))
    def test_contraction(self, seed, p, t, bc):
        f = smooth_random(seed, 257, vanish_at_bottom=bc == "DirichletNeumann")
        assert heat_vertical(f, t, bc).lp_norm(p) <= f.lp_norm(p) * (1 + 1e-9)


class TestPeriodizedOracle:
    @pytest.mark.parametrize("t", np.logspace(-3, 0, 7))
    def test_agreement(self, t):
        f = smooth_random(7, 129)
        np.testing.assert_allclose(periodized_heat_oracle(f, t).values, heat_vertical(f, t).values,
                                   atol=1e-8)

    def test_unit_mass(self):
        f = prof(lambda z: np.ones_like(z), 65)
        np.testing.assert_allclose(periodized_heat_oracle(f, 0.3).values, 1.0, atol=1e-12)

    def test_long_time_mean(self):
        f = smooth_random(2, 65)
        mean = f.integral() / f.h
        np.testing.assert_allclose(periodized_heat_oracle(f, 5.0, k_max=60).values, mean, atol=1e-10)


class TestSmoothingComposite:
    def test_alpha_one_is_heat(self):
        f = prof(lambda z: np.sin(3 * z) + z * z)
        np.testing.assert_allclose(smoothing_rl(f, 1.0, 0.01).values, heat_vertical(f, 0.01).values, atol=1e-5)

    def test_alpha_zero_is_heat_of_derivative(self):
        f = prof(lambda z: np.sin(np.pi * z) / np.pi, 129)
        expected = math.exp(-0.02 * np.pi**2) * np.cos(np.pi * f.z)
        np.testing.assert_allclose(smoothing_rl(f, 0.0, 0.02).values, expected, atol=1e-12)

    def test_heat_of_derivative_at_zero_time(self):
        f = prof(lambda z: np.sin(np.pi * z), 129)
        np.testing.assert_allclose(heat_of_derivative(f.values, 1.0, 0.0), np.pi * np.cos(np.pi * f.z),
                                   atol=1e-10)

    def test_derivative_of_heat(self):
        f = prof(lambda z: np.cos(2 * np.pi * z), 65)
        t = 0.01
        expected = -2 * np.pi * math.exp(-t * 4 * np.pi**2) * np.sin(2 * np.pi * f.z)
        np.testing.assert_allclose(derivative_of_heat(f.values, 1.0, t), expected, atol=1e-12)

    @pytest.mark.parametrize("alpha", [0.25, 0.5, 0.75])
    def test_make_admissible(self, alpha):
        f = make_admissible(smooth_random(3), alpha)
        assert abs(riemann_liouville(f, alpha).values[-1]) < 1e-12

    def test_invalid(self):
        with pytest.raises(ValueError):
            smoothing_rl(prof(lambda z: z), 1.5, 0.1)
        with pytest.raises(ValueError):
            smoothing_rl(prof(lambda z: z), 0.5, 0.0)


def test_profile_validation():
    with pytest.raises(ValueError):
        VerticalProfile(np.array([1.0]))
    with pytest.raises(ValueError):
        VerticalProfile(np.array([1.0, np.nan]))
    with pytest.raises(ValueError):
        VerticalProfile(np.zeros(3), 1.0, 0.0)


def test_gamma_identity_used_by_admissibility():
    f = prof(lambda z: np.ones_like(z), 257, 0.0, 2.0)
    end = riemann_liouville(f, 0.4).values[-1]
    assert end == pytest.approx(2.0**0.4 / gamma(1.4), rel=1e-12)
