"""Vertical calculus on ``J = (z0, z1)``.

This module provides Riemann--Liouville integrals, Caputo derivatives, and the
vertical heat semigroups with Neumann or Dirichlet--Neumann boundary
conditions. It also provides an independent image-sum oracle for the Neumann
heat semigroup.

All operators act along the last axis of ``VerticalProfile.values``, so a
whole 3-D field can be processed as a batch of columns.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import fft as sfft
from scipy.signal import fftconvolve
from scipy.special import gamma

from .domain import (
    BC,
    cos_analysis,
    cos_synthesis,
    halfcos_analysis,
    halfcos_synthesis,
    halfsin_analysis,
    halfsin_synthesis,
    sin_analysis,
    sin_synthesis,
    trapezoid_weights,
)


@dataclass(frozen=True)
class VerticalProfile:
    """Values on the uniform grid ``z_j = z0 + j h / M`` (last axis)."""

    values: np.ndarray
    z0: float = 0.0
    z1: float = 1.0

    def __post_init__(self) -> None:
        v = np.asarray(self.values, dtype=float)
        if v.shape[-1] < 2:
            raise ValueError("a vertical profile needs at least two grid points")
        if not np.all(np.isfinite(v)):
            raise ValueError("profile contains non-finite values")
        if not self.z1 > self.z0:
            raise ValueError("require z1 > z0")
        object.__setattr__(self, "values", v)

    @property
    def n(self) -> int:
        return self.values.shape[-1]

    @property
    def h(self) -> float:
        return self.z1 - self.z0

    @property
    def dz(self) -> float:
        return self.h / (self.n - 1)

    @property
    def z(self) -> np.ndarray:
        return self.z0 + self.dz * np.arange(self.n)

    def with_values(self, values: np.ndarray) -> "VerticalProfile":
        return VerticalProfile(values, self.z0, self.z1)

    def integral(self) -> np.ndarray:
        return self.values @ trapezoid_weights(self.n, self.dz)

    def lp_norm(self, p: float = 1.0) -> np.ndarray:
        a = np.abs(self.values)
        if np.isinf(p):
            return a.max(axis=-1)
        return (a**p @ trapezoid_weights(self.n, self.dz)) ** (1.0 / p)


def profile_from_function(func, n: int, z0: float = 0.0, z1: float = 1.0) -> VerticalProfile:
    z = z0 + (z1 - z0) * np.arange(n) / (n - 1)
    return VerticalProfile(func(z), z0, z1)


# ---------------------------------------------------------------------------
# Riemann--Liouville integrals by product integration
# ---------------------------------------------------------------------------


def _pow_diff2(m: np.ndarray, beta: float) -> np.ndarray:
    """``(m+1)^b - 2 m^b + (m-1)^b`` for ``m >= 1`` without cancellation."""
    x = 1.0 / m
    with np.errstate(divide="ignore"):
        return m**beta * (np.expm1(beta * np.log1p(x)) + np.expm1(beta * np.log1p(-x)))


def _rl_weights(n: int, alpha: float) -> tuple[np.ndarray, np.ndarray]:
    """Toeplitz part and first-column weights of the product trapezoid rule.

    ``(I^a f)_i = d^a / Gamma(a+2) * (w0_i f_0 + sum_{j=1}^{i} T_{i-j} f_j)``,
    exact when ``f`` is piecewise linear on the grid.
    """
    beta = alpha + 1.0
    toe = np.empty(n)
    toe[0] = 1.0
    if n > 1:
        toe[1:] = _pow_diff2(np.arange(1, n, dtype=float), beta)
    i = np.arange(n, dtype=float)
    w0 = np.zeros(n)
    ii = i[1:]
    with np.errstate(divide="ignore"):
        w0[1:] = ii**alpha * (ii * np.expm1(beta * np.log1p(-1.0 / ii)) + 1.0 + alpha)
    return toe, w0


def _rl_apply(values: np.ndarray, dz: float, alpha: float) -> np.ndarray:
    n = values.shape[-1]
    toe, w0 = _rl_weights(n, alpha)
    out = np.zeros_like(values)
    body = values[..., 1:]
    if n <= 256:
        conv = _direct_causal_conv(body, toe[: n - 1])
    else:
        shape = (1,) * (body.ndim - 1) + (n - 1,)
        conv = fftconvolve(body, toe[: n - 1].reshape(shape), axes=-1)[..., : n - 1]
    out[..., 1:] = conv + w0[1:] * values[..., :1]
    return out * (dz**alpha / gamma(alpha + 2.0))


def _direct_causal_conv(x: np.ndarray, kernel: np.ndarray) -> np.ndarray:
    n = x.shape[-1]
    idx = np.arange(n)
    lag = idx[:, None] - idx[None, :]
    mat = np.where(lag >= 0, kernel[np.clip(lag, 0, None)], 0.0)
    return x @ mat.T


def riemann_liouville(f: VerticalProfile, alpha: float) -> VerticalProfile:
    """Left Riemann--Liouville integral ``I^alpha_{z0} f``.

    Product integration against ``(z - zeta)^(alpha-1)``: exact for piecewise
    linear ``f``. ``alpha = 0`` is the identity.

    Raises
    ------
    ValueError
        If ``alpha < 0``.
    """
    alpha = float(alpha)
    if alpha < 0:
        raise ValueError(f"order must be nonnegative, got {alpha}")
    if alpha == 0:
        return f
    return f.with_values(_rl_apply(f.values, f.dz, alpha))


def adjoint_rl(psi: VerticalProfile, alpha: float) -> VerticalProfile:
    """Right (reflected) integral ``(1/Gamma(a)) int_z^{z1} (xi - z)^(a-1) psi(xi) dxi``."""
    alpha = float(alpha)
    if alpha < 0:
        raise ValueError(f"order must be nonnegative, got {alpha}")
    if alpha == 0:
        return psi
    rev = psi.values[..., ::-1]
    return psi.with_values(_rl_apply(rev, psi.dz, alpha)[..., ::-1])


# ---------------------------------------------------------------------------
# Caputo derivative
# ---------------------------------------------------------------------------


def caputo(f: VerticalProfile, alpha: float) -> VerticalProfile:
    """Caputo derivative ``I^{1-alpha} d_z f`` of the piecewise-linear interpolant.

    The derivative of the interpolant is piecewise constant, for which the
    fractional integral has a closed form; grid values are exact for that
    interpolant.

    Raises
    ------
    ValueError
        If ``alpha`` is not in ``(0, 1)``.
    """
    alpha = float(alpha)
    if not 0.0 < alpha < 1.0:
        raise ValueError(f"Caputo order must lie in (0, 1), got {alpha}")
    slopes = np.diff(f.values, axis=-1) / f.dz
    n = f.n
    gam = 1.0 - alpha
    m = np.arange(n - 1, dtype=float)
    kern = (m + 1.0) ** gam - m**gam
    shape = (1,) * (slopes.ndim - 1) + (n - 1,)
    if n <= 256:
        conv = _direct_causal_conv(slopes, kern)
    else:
        conv = fftconvolve(slopes, kern.reshape(shape), axes=-1)[..., : n - 1]
    out = np.zeros_like(f.values)
    out[..., 1:] = conv * f.dz**gam / gamma(2.0 - alpha)
    return f.with_values(out)


def caputo_at(f: VerticalProfile, alpha: float, z: np.ndarray) -> np.ndarray:
    """Caputo derivative of the piecewise-linear interpolant at arbitrary points ``z``."""
    alpha = float(alpha)
    if not 0.0 < alpha < 1.0:
        raise ValueError(f"Caputo order must lie in (0, 1), got {alpha}")
    gam = 1.0 - alpha
    slopes = np.diff(f.values, axis=-1) / f.dz
    knots = f.z
    z = np.asarray(z, dtype=float)
    left = np.clip(z[:, None] - knots[None, :-1], 0.0, None) ** gam
    right = np.clip(z[:, None] - knots[None, 1:], 0.0, None) ** gam
    return (slopes @ (left - right).T) / gamma(2.0 - alpha)


# ---------------------------------------------------------------------------
# Vertical heat semigroups
# ---------------------------------------------------------------------------


def _check_t(t: float) -> float:
    t = float(t)
    if t < 0:
        raise ValueError(f"time must be nonnegative, got {t}")
    return t


def _wavenumbers(n_modes: int, h: float, shifted: bool) -> np.ndarray:
    k = np.arange(n_modes, dtype=float)
    if shifted:
        k = k + 0.5
    return k * np.pi / h


def heat_vertical(f: VerticalProfile, t: float, bc: BC | str = BC.NEUMANN) -> VerticalProfile:
    """Vertical heat semigroup ``exp(t Delta_*)`` by diagonal multipliers.

    Neumann: coefficient of ``cos(n pi s)`` times ``exp(-t (n pi/h)^2)``.
    Dirichlet--Neumann: coefficient of ``sin((n+1/2) pi s)`` times
    ``exp(-t ((n+1/2) pi/h)^2)``; the value at ``z0`` is taken to be zero.

    Raises
    ------
    ValueError
        If ``t < 0``.
    """
    t = _check_t(t)
    bc = BC.parse(bc)
    if bc is BC.NEUMANN:
        c = cos_analysis(f.values)
        c *= np.exp(-t * _wavenumbers(f.n, f.h, False) ** 2)
        return f.with_values(cos_synthesis(c))
    d = halfsin_analysis(f.values)
    d *= np.exp(-t * _wavenumbers(f.n - 1, f.h, True) ** 2)
    return f.with_values(halfsin_synthesis(d))


def heat_of_derivative(values: np.ndarray, h: float, t: float, bc: BC | str = BC.NEUMANN) -> np.ndarray:
    """``exp(t Delta_*) d_z g`` for grid values ``g`` (last axis).

    ``d_z g`` is the derivative on the open interval, with no boundary
    contributions. For Neumann, the linear interpolant of the end values is
    split off, because its derivative is a constant that the semigroup fixes.
    The remainder vanishes at both ends and satisfies
    ``exp(t Delta_N) d_z g = d_z exp(t Delta_D) g``. Under Dirichlet--Neumann
    the end value at ``z1`` is subtracted and ``g`` is expanded in
    ``cos((n+1/2) pi s)``, whose derivatives are the mixed eigenfunctions.
    """
    t = _check_t(t)
    bc = BC.parse(bc)
    n = values.shape[-1]
    if bc is BC.NEUMANN:
        s = np.linspace(0.0, 1.0, n)
        g0 = values[..., :1]
        g1 = values[..., -1:]
        rem = values - g0 - (g1 - g0) * s
        b = sin_analysis(rem)
        k = _wavenumbers(n, h, False)[1:-1]
        cc = np.zeros(values.shape[:-1] + (n,))
        cc[..., 1:-1] = k * np.exp(-t * k**2) * b
        cc[..., :1] = (g1 - g0) / h
        return cos_synthesis(cc)
    rem = values - values[..., -1:]
    e = halfcos_analysis(rem)
    k = _wavenumbers(n - 1, h, True)
    return halfsin_synthesis(-k * np.exp(-t * k**2) * e)


def derivative_of_heat(values: np.ndarray, h: float, t: float, bc: BC | str = BC.NEUMANN) -> np.ndarray:
    """``d_z exp(t Delta_*) phi`` for grid values ``phi`` (last axis)."""
    t = _check_t(t)
    bc = BC.parse(bc)
    n = values.shape[-1]
    if bc is BC.NEUMANN:
        c = cos_analysis(values)
        k = _wavenumbers(n, h, False)
        return sin_synthesis((-k * np.exp(-t * k**2) * c)[..., 1:-1])
    d = halfsin_analysis(values)
    k = _wavenumbers(n - 1, h, True)
    return halfcos_synthesis(k * np.exp(-t * k**2) * d)


def make_admissible(f: VerticalProfile, alpha: float) -> VerticalProfile:
    """Subtract the constant that makes ``I^alpha f`` vanish at ``z1``.

    Constants span the obstruction, since ``I^alpha 1 (z1) = h^alpha / Gamma(alpha+1)``.
    """
    if alpha == 0:
        return f
    g_end = riemann_liouville(f, alpha).values[..., -1:]
    one_end = f.h**alpha / gamma(alpha + 1.0)
    return f.with_values(f.values - g_end / one_end)


def smoothing_rl(f: VerticalProfile, alpha: float, t: float, bc: BC | str = BC.NEUMANN) -> VerticalProfile:
    """Composite ``exp(t Delta_*) d_z I^alpha_{z0} f`` applied as written.

    The decay rate ``t^{-(1-alpha)/2}`` in ``L^1`` is expected for data with
    ``I^alpha f (z1) = 0``; see :func:`make_admissible`.
    """
    if not 0.0 <= alpha <= 1.0:
        raise ValueError(f"alpha must lie in [0, 1], got {alpha}")
    if t <= 0:
        raise ValueError("smoothing composite requires t > 0")
    g = riemann_liouville(f, alpha)
    return f.with_values(heat_of_derivative(g.values, f.h, t, bc))


# ---------------------------------------------------------------------------
# Image-sum oracle
# ---------------------------------------------------------------------------


def _trig_upsample(values: np.ndarray, factor: int) -> np.ndarray:
    """Trigonometric interpolation of periodic samples onto a ``factor``-times finer grid."""
    n = values.shape[-1]
    if factor == 1:
        return values.copy()
    spec = sfft.rfft(values, axis=-1)
    nf = n * factor
    padded = np.zeros(values.shape[:-1] + (nf // 2 + 1,), dtype=complex)
    padded[..., : spec.shape[-1]] = spec
    if n % 2 == 0:
        padded[..., n // 2] *= 0.5
    return sfft.irfft(padded, n=nf, axis=-1) * factor


def gauss_kernel_1d(x: np.ndarray, t: float) -> np.ndarray:
    return np.exp(-(x**2) / (4.0 * t)) / np.sqrt(4.0 * np.pi * t)


def periodic_gauss_convolve(values: np.ndarray, period: float, t: float, k_max: int = 8,
                            out_stride: int = 1) -> np.ndarray:
    """Periodic Gauss convolution of periodic samples (last axis) by direct summation.

    The samples are trigonometrically up-sampled until the kernel is
    resolved. They are then convolved against the truncated image sum
    ``E_t(z) = sum_{|k| <= k_max} G_t(z - k period)``, and the result is
    returned at every ``out_stride``-th original sample.
    """
    n = values.shape[-1]
    kappa = 2.0 * np.pi / period
    factor = 1
    while t * (kappa * (factor * n - n / 2.0)) ** 2 < 40.0:
        factor += 1
    fine = _trig_upsample(values, factor)
    nf = n * factor
    dy = period / nf
    y = dy * np.arange(nf)
    x_out = (period / n) * np.arange(0, n, out_stride)
    diff = x_out[:, None] - y[None, :]
    diff = (diff + 0.5 * period) % period - 0.5 * period
    kern = np.zeros_like(diff)
    for k in range(-k_max, k_max + 1):
        kern += gauss_kernel_1d(diff - k * period, t)
    return fine @ kern.T * dy


def periodized_heat_oracle(f: VerticalProfile, t: float, k_max: int = 8) -> VerticalProfile:
    """Neumann heat semigroup via even reflection and Gauss image sums.

    ``f`` is reflected evenly about ``z0``, extended with period ``2h``, and
    convolved with the truncated periodic Gauss kernel. The result is
    restricted to ``J``. This is an independent check on
    :func:`heat_vertical`.
    """
    if t <= 0:
        raise ValueError("oracle requires t > 0")
    v = f.values
    ext = np.concatenate([v, v[..., -2:0:-1]], axis=-1)
    out = periodic_gauss_convolve(ext, 2.0 * f.h, t, k_max)
    return f.with_values(out[..., : f.n])
