"""Hydrostatic Stokes semigroup ``S(t) = exp(t Delta_H) x exp(t Delta_*)``.

In the Fourier x vertical-eigenbasis representation ``S(t)`` is diagonal
with eigenvalues ``lambda_{k,n} = |k|^2 + k_n^2``. Here ``k_n = n pi / h``
(Neumann) or ``(n + 1/2) pi / h`` (Dirichlet--Neumann). The composite
smoothing operators used by the estimates and by the Duhamel integrand are
exposed as named methods.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import fft as sfft

from .domain import Domain
from .field import PhysicalField, gradient_from_coeffs, norm_inf_p
from .hops import frac_laplacian_op, helmholtz_project
from .vcalc import _rl_apply, heat_of_derivative


def _check_positive(t: float) -> float:
    t = float(t)
    if not t > 0:
        raise ValueError(f"time must be positive, got {t}")
    return t


def loglog_fit(t: np.ndarray, y: np.ndarray) -> tuple[float, float, float]:
    """Least-squares fit ``log y = log C + p log t``; returns ``(p, C, r2)``."""
    lt = np.log(np.asarray(t, dtype=float))
    ly = np.log(np.asarray(y, dtype=float))
    A = np.vstack([lt, np.ones_like(lt)]).T
    coef, *_ = np.linalg.lstsq(A, ly, rcond=None)
    resid = ly - A @ coef
    ss_tot = np.sum((ly - ly.mean()) ** 2)
    r2 = 1.0 - np.sum(resid**2) / ss_tot if ss_tot > 0 else 1.0
    return float(coef[0]), float(np.exp(coef[1])), float(r2)


@dataclass(frozen=True)
class SmoothingFit:
    """Result of an ``L^inf(L^1) -> L^inf(L^q)`` smoothing sweep."""

    q: float
    t: np.ndarray
    ratio: np.ndarray
    fitted_exponent: float
    r2: float
    candidates: dict

    def deviations(self) -> dict:
        return {name: self.fitted_exponent - p for name, p in self.candidates.items()}


class StokesSemigroup:
    """Diagonal hydrostatic Stokes semigroup on a :class:`Domain`."""

    def __init__(self, domain: Domain):
        self.domain = domain
        self.eigenvalues = domain.k2[..., None] + domain.kz[None, None, :] ** 2
        self.eigenvalues.setflags(write=False)

    def multiplier(self, t: float) -> np.ndarray:
        t = float(t)
        if t < 0:
            raise ValueError(f"time must be nonnegative, got {t}")
        return np.exp(-t * self.eigenvalues)

    # -- basic action -------------------------------------------------------

    def apply_coeffs(self, coeffs: np.ndarray, t: float) -> np.ndarray:
        return coeffs * self.multiplier(t)

    def apply(self, a: PhysicalField, t: float) -> PhysicalField:
        """``S(t) a``; ``t = 0`` is the identity."""
        if float(t) == 0.0:
            return a
        d = self.domain
        return a.with_data(d.inverse(self.apply_coeffs(d.forward(a.data), t)))

    def apply_grad(self, a: PhysicalField, t: float) -> PhysicalField:
        """``grad S(t) a`` with three derivatives per component, ``t > 0``."""
        t = _check_positive(t)
        d = self.domain
        g = gradient_from_coeffs(d, self.apply_coeffs(d.forward(a.data), t))
        return PhysicalField(g.reshape((-1,) + d.shape), d)

    def _apply_horizontal_vertical(self, data: np.ndarray, t: float) -> np.ndarray:
        d = self.domain
        c = sfft.fft2(data, axes=(-3, -2), norm="forward")
        c *= np.exp(-t * d.k2)[..., None]
        return sfft.ifft2(c, axes=(-3, -2), norm="forward").real

    # -- composites ---------------------------------------------------------

    def apply_projected_fraclap(self, f: PhysicalField, alpha: float, t: float) -> PhysicalField:
        """``S(t) P (-Delta_H)^{alpha/2} f`` for ``alpha`` in ``[0, 1)``."""
        t = _check_positive(t)
        if not 0.0 <= alpha < 1.0:
            raise ValueError(f"alpha must lie in [0, 1), got {alpha}")
        g = frac_laplacian_op(alpha)(f) if alpha > 0 else f
        return self.apply(helmholtz_project(g), t)

    def apply_div_h(self, tensor: PhysicalField, t: float, project: bool = True) -> PhysicalField:
        """``S(t) P div_H F`` for a 2x2 tensor field with components ``F_11, F_12, F_21, F_22``.

        ``(div_H F)_i = sum_j d_j F_ij``. With ``project=False`` the
        projection is skipped.
        """
        t = _check_positive(t)
        if tensor.ncomp != 4:
            raise ValueError("tensor field needs 4 components (row-major 2x2)")
        d = self.domain
        c = sfft.fft2(tensor.data, axes=(-3, -2), norm="forward")
        kx = d.kx_deriv[..., None]
        ky = d.ky_deriv[..., None]
        div = np.stack([1j * kx * c[0] + 1j * ky * c[1], 1j * kx * c[2] + 1j * ky * c[3]])
        out = PhysicalField(sfft.ifft2(div, axes=(-3, -2), norm="forward").real, d)
        if project:
            out = helmholtz_project(out)
        return self.apply(out, t)

    def apply_dz_rl(self, f: PhysicalField, alpha: float, t: float) -> PhysicalField:
        """``S(t) d_z I^alpha_{z0} f`` for ``alpha`` in ``[0, 1]``.

        Applied as written; the decay rate assumes ``I^alpha f (z1) = 0``
        (see :func:`hydrostokes.vcalc.make_admissible`).
        """
        t = _check_positive(t)
        if not 0.0 <= alpha <= 1.0:
            raise ValueError(f"alpha must lie in [0, 1], got {alpha}")
        d = self.domain
        g = _rl_apply(f.data, d.dz, alpha) if alpha > 0 else f.data
        v = heat_of_derivative(g, d.h, t, d.bc)
        return f.with_data(self._apply_horizontal_vertical(v, t))

    def apply_dz(self, f: PhysicalField, t: float) -> PhysicalField:
        """``S(t) d_z f``."""
        return self.apply_dz_rl(f, 0.0, t)

    def smoothing_l1_lq(self, a: PhysicalField, t_grid, q: float,
                        oversample: int = 1) -> SmoothingFit:
        """Sweep ``||S(t) a||_{inf,q} / ||a||_{inf,1}`` over ``t_grid`` and fit the slope.

        The fitted exponent is reported next to both candidate rates,
        ``-(1 - 1/q)`` and ``-(1 - 1/q)/2``, without choosing between them.
        """
        t_grid = np.asarray(t_grid, dtype=float)
        if np.any(t_grid <= 0):
            raise ValueError("smoothing sweep requires t > 0")
        q = float(q)
        base = norm_inf_p(a, 1.0, oversample)
        if base == 0:
            raise ValueError("zero data")
        ratio = np.array([norm_inf_p(self.apply(a, t), q, oversample) / base for t in t_grid])
        p, _, r2 = loglog_fit(t_grid, ratio)
        inv_q = 0.0 if np.isinf(q) else 1.0 / q
        return SmoothingFit(
            q=q, t=t_grid, ratio=ratio, fitted_exponent=p, r2=r2,
            candidates={"full": -(1.0 - inv_q), "half": -(1.0 - inv_q) / 2.0},
        )
