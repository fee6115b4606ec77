"""Field containers and anisotropic norms.

The central norm is ``||f||_{inf,p} = sup_{x'} ( int_J |f(x', z)|^p dz )^{1/p}``.
For vector fields ``|f|`` is the pointwise Euclidean magnitude over
components. The supremum over ``x'`` is taken over grid points only.
The vertical integral of ``|f|^p`` is evaluated with Simpson's rule on a
refined vertical grid, reached by spectral interpolation, because ``|f|`` is
not smooth where ``f`` changes sign.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field as dc_field

import numpy as np
from scipy import fft as sfft

from .domain import BC, Domain, halfcos_synthesis, sin_synthesis

DEFAULT_OVERSAMPLE = 4
DEFAULT_T_GRID = np.logspace(-6.0, 0.0, 66)[1:-1]


def _as_components(data: np.ndarray) -> np.ndarray:
    arr = np.asarray(data, dtype=float)
    if arr.ndim == 3:
        arr = arr[None]
    if arr.ndim != 4:
        raise ValueError(f"expected (ncomp, Nx, Ny, Nz) data, got shape {arr.shape}")
    return arr


@dataclass(frozen=True)
class PhysicalField:
    """Grid values of a scalar or vector field.

    ``data`` has shape ``(ncomp, Nx, Ny, Nz)``; a 3-D array is promoted to a
    single component.
    """

    data: np.ndarray
    domain: Domain

    def __post_init__(self) -> None:
        arr = _as_components(self.data)
        self.domain.check_physical(arr)
        if not np.all(np.isfinite(arr)):
            raise ValueError("field contains non-finite values")
        object.__setattr__(self, "data", arr)

    @property
    def ncomp(self) -> int:
        return self.data.shape[0]

    def with_data(self, data: np.ndarray) -> "PhysicalField":
        return PhysicalField(data, self.domain)

    def __add__(self, other: "PhysicalField") -> "PhysicalField":
        return self.with_data(self.data + other.data)

    def __sub__(self, other: "PhysicalField") -> "PhysicalField":
        return self.with_data(self.data - other.data)

    def __mul__(self, scalar: float) -> "PhysicalField":
        return self.with_data(self.data * scalar)

    __rmul__ = __mul__

    def __neg__(self) -> "PhysicalField":
        return self.with_data(-self.data)


@dataclass(frozen=True)
class HorizontalField:
    """Values on the horizontal grid, shape ``(ncomp, Nx, Ny)``."""

    data: np.ndarray
    domain: Domain

    def __post_init__(self) -> None:
        arr = np.asarray(self.data, dtype=float)
        if arr.ndim == 2:
            arr = arr[None]
        if arr.shape[-2:] != self.domain.horizontal_shape:
            raise ValueError("horizontal field does not match the domain")
        if not np.all(np.isfinite(arr)):
            raise ValueError("field contains non-finite values")
        object.__setattr__(self, "data", arr)


@dataclass(frozen=True)
class NormReport:
    """Evaluated anisotropic norms of a field.

    ``one_norms`` holds ``||f||_{inf,p}`` for any extra requested ``p``;
    it is kept out of the JSON form.
    """

    inf_1: float
    inf_inf: float
    sobolev: float
    seminorm_mu: float
    one_norms: dict = dc_field(default_factory=dict)

    @property
    def triple(self) -> float:
        return self.seminorm_mu + self.inf_1

    def to_dict(self) -> dict:
        return {
            "inf_1": float(self.inf_1),
            "inf_inf": float(self.inf_inf),
            "sobolev": float(self.sobolev),
            "seminorm_mu": float(self.seminorm_mu),
            "triple": float(self.triple),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=False)


# ---------------------------------------------------------------------------
# Spectral derivatives
# ---------------------------------------------------------------------------


def vertical_derivative_values(domain: Domain, vcoeffs: np.ndarray) -> np.ndarray:
    """Grid values of ``d/dz`` of a vertical eigen-expansion (last axis).

    Neumann cosine series differentiate into sine series; the mixed basis
    differentiates into ``cos((n + 1/2) pi s)``.
    """
    kz = domain.kz
    if domain.bc is BC.NEUMANN:
        return sin_synthesis(-kz[1:-1] * vcoeffs[..., 1:-1])
    return halfcos_synthesis(kz * vcoeffs)


def gradient_from_coeffs(domain: Domain, coeffs: np.ndarray) -> np.ndarray:
    """Gradient ``(d/dx, d/dy, d/dz)`` per component from spectral coefficients.

    Returns an array of shape ``(ncomp, 3, Nx, Ny, Nz)``.
    """
    ncomp = coeffs.shape[0]
    out = np.empty((ncomp, 3) + domain.shape)
    dx = sfft.ifft2(1j * domain.kx_deriv[..., None] * coeffs, axes=(-3, -2), norm="forward").real
    dy = sfft.ifft2(1j * domain.ky_deriv[..., None] * coeffs, axes=(-3, -2), norm="forward").real
    g = sfft.ifft2(coeffs, axes=(-3, -2), norm="forward").real
    out[:, 0] = domain.vertical_inverse(np.ascontiguousarray(dx))
    out[:, 1] = domain.vertical_inverse(np.ascontiguousarray(dy))
    out[:, 2] = vertical_derivative_values(domain, g)
    return out


def gradient(f: PhysicalField) -> PhysicalField:
    """Spectral gradient, three directional derivatives per component.

    Component ``3*c + i`` of the result is ``d_i f_c`` with ``i`` in
    ``(x, y, z)``.
    """
    g = gradient_from_coeffs(f.domain, f.domain.forward(f.data))
    return PhysicalField(g.reshape((-1,) + f.domain.shape), f.domain)


def horizontal_gradient(f: PhysicalField) -> PhysicalField:
    """Horizontal gradient only, components ordered ``(d_x f_c, d_y f_c)``."""
    g = gradient(f).data.reshape((f.ncomp, 3) + f.domain.shape)
    return PhysicalField(g[:, :2].reshape((-1,) + f.domain.shape), f.domain)


# ---------------------------------------------------------------------------
# Norms
# ---------------------------------------------------------------------------


def _check_p(p: float) -> float:
    p = float(p)
    if not p >= 1.0:
        raise ValueError(f"norm exponent must satisfy p >= 1, got {p}")
    return p


def refined_weights(n: int, h: float) -> np.ndarray:
    """Simpson weights on ``n`` uniform points (trapezoid if the cell count is odd)."""
    dz = h / (n - 1)
    if (n - 1) % 2:
        w = np.full(n, dz)
        w[0] = w[-1] = 0.5 * dz
        return w
    w = np.full(n, 2.0 * dz / 3.0)
    w[1::2] = 4.0 * dz / 3.0
    w[0] = w[-1] = dz / 3.0
    return w


def column_norms(f: PhysicalField, p: float = 1.0, oversample: int = DEFAULT_OVERSAMPLE) -> np.ndarray:
    """Vertical ``L^p`` norm of ``|f|`` at every horizontal grid point."""
    p = _check_p(p)
    dom = f.domain
    fine = dom.refine_z(f.data, oversample)
    mag = np.sqrt(np.sum(fine**2, axis=0)) if f.ncomp > 1 else np.abs(fine[0])
    if np.isinf(p):
        return mag.max(axis=-1)
    w = refined_weights(mag.shape[-1], dom.h)
    if p == 1.0:
        return mag @ w
    return (mag**p @ w) ** (1.0 / p)


def norm_inf_p(f: PhysicalField, p: float = 1.0, oversample: int = DEFAULT_OVERSAMPLE) -> float:
    """``||f||_{inf,p}``: grid supremum of the vertical ``L^p`` norm.

    Parameters
    ----------
    f : PhysicalField
    p : float
        Exponent in ``[1, inf]``.
    oversample : int
        Vertical refinement factor for the integral of ``|f|^p``.

    Raises
    ------
    ValueError
        If ``p < 1``.
    """
    return float(column_norms(f, p, oversample).max())


def norm_sobolev(f: PhysicalField, grad: PhysicalField | None = None,
                 oversample: int = DEFAULT_OVERSAMPLE) -> float:
    """``||f||_{1,inf,1} = ||f||_{inf,1} + ||grad f||_{inf,1}``.

    ``grad`` defaults to the spectral gradient of ``f``.
    """
    if grad is None:
        grad = gradient(f)
    return norm_inf_p(f, 1.0, oversample) + norm_inf_p(grad, 1.0, oversample)


def seminorm_mu(a: PhysicalField, mu: float, t_grid=None,
                oversample: int = DEFAULT_OVERSAMPLE) -> float:
    """Sampled ``[a]_mu = sup_{0<t<1} t^mu ||grad S(t) a||_{inf,1}``.

    The maximum is taken over ``t_grid`` (default: 64 log-spaced points in
    ``(1e-6, 1)``), so the returned value is a lower bound of the supremum.
    """
    mu = float(mu)
    if not 0.0 <= mu < 0.5:
        raise ValueError(f"mu must lie in [0, 1/2), got {mu}")
    t_grid = DEFAULT_T_GRID if t_grid is None else np.asarray(t_grid, dtype=float)
    if t_grid.size == 0 or np.any(t_grid <= 0) or np.any(t_grid >= 1):
        raise ValueError("t_grid must be a nonempty subset of (0, 1)")
    from .semigroup import StokesSemigroup

    sg = StokesSemigroup(a.domain)
    coeffs = a.domain.forward(a.data)
    best = 0.0
    for t in t_grid:
        g = gradient_from_coeffs(a.domain, sg.multiplier(t) * coeffs)
        val = t**mu * norm_inf_p(PhysicalField(g.reshape((-1,) + a.domain.shape), a.domain),
                                 1.0, oversample)
        best = max(best, val)
    return float(best)


def norm_report(f: PhysicalField, mu: float = 0.25, p_list=(), t_grid=None,
                oversample: int = DEFAULT_OVERSAMPLE) -> NormReport:
    """All norms of ``f`` in one report."""
    inf1 = norm_inf_p(f, 1.0, oversample)
    return NormReport(
        inf_1=inf1,
        inf_inf=norm_inf_p(f, np.inf, oversample),
        sobolev=inf1 + norm_inf_p(gradient(f), 1.0, oversample),
        seminorm_mu=seminorm_mu(f, mu, t_grid, oversample),
        one_norms={float(p): norm_inf_p(f, p, oversample) for p in p_list},
    )
