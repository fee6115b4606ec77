"""Computational domain and fast trigonometric transforms.

The domain is the periodic box ``[0, Lx) x [0, Ly)`` times the vertical
interval ``(z0, z1)``. Horizontally, fields are expanded in complex
exponentials ``exp(i k . x')``. Vertically they are expanded in the
eigenfunctions of the 1-D Laplacian with the selected boundary condition:

* ``Neumann``: ``cos(n pi s)``, for ``n = 0..Nz-1``,
* ``DirichletNeumann``: ``sin((n + 1/2) pi s)``, for ``n = 0..Nz-2``
  (zero at ``z0``, zero slope at ``z1``).

Here ``s = (z - z0) / h`` is the normalized height. The vertical collocation
grid is the uniform grid ``s_j = j / (Nz - 1)``, which includes both end
points. On this grid the Neumann transform is a type-I DCT and the mixed
transform is a type-II DST.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np
from scipy import fft as sfft


class BC(str, enum.Enum):
    """Vertical boundary condition of the Laplacian."""

    NEUMANN = "Neumann"
    DIRICHLET_NEUMANN = "DirichletNeumann"

    @classmethod
    def parse(cls, value: "BC | str") -> "BC":
        if isinstance(value, cls):
            return value
        for member in cls:
            if member.value.lower() == str(value).lower():
                return member
        raise ValueError(f"unknown vertical boundary condition {value!r}")


class ShapeError(ValueError):
    """Raised when an array does not match the grid of a domain."""


# ---------------------------------------------------------------------------
# 1-D vertical transforms (act on the last axis)
# ---------------------------------------------------------------------------


def cos_analysis(f: np.ndarray) -> np.ndarray:
    """Coefficients ``c_n`` with ``f_j = sum_n c_n cos(n pi j / M)``."""
    c = sfft.idct(f, type=1, axis=-1)
    c[..., 1:-1] *= 2.0
    return c


def cos_synthesis(c: np.ndarray, n_out: int | None = None) -> np.ndarray:
    """Evaluate a cosine series on the uniform grid with ``n_out`` points.

    When ``n_out`` exceeds the number of coefficients, the series is zero
    padded, which gives spectral interpolation onto a finer grid.
    """
    n_in = c.shape[-1]
    n_out = n_in if n_out is None else n_out
    x = np.zeros(c.shape[:-1] + (n_out,), dtype=c.dtype)
    m = min(n_in, n_out)
    x[..., :m] = c[..., :m]
    x[..., 1:] *= 0.5
    if n_out <= n_in:
        x[..., -1] *= 2.0
    return sfft.dct(x, type=1, axis=-1)


def sin_analysis(f: np.ndarray) -> np.ndarray:
    """Coefficients ``b_n`` (``n = 1..M-1``) from interior grid values.

    ``f_j = sum_n b_n sin(n pi j / M)``. End values are ignored; they are
    zero for every sine series.
    """
    m = f.shape[-1] - 1
    return sfft.dst(f[..., 1:-1], type=1, axis=-1) / m


def sin_synthesis(b: np.ndarray, n_out: int | None = None) -> np.ndarray:
    """Evaluate ``sum_n b_n sin(n pi s)`` on a uniform grid of ``n_out`` points."""
    n_in = b.shape[-1] + 2
    n_out = n_in if n_out is None else n_out
    x = np.zeros(b.shape[:-1] + (n_out - 2,), dtype=b.dtype)
    m = min(n_in, n_out) - 2
    x[..., :m] = b[..., :m]
    out = np.zeros(b.shape[:-1] + (n_out,), dtype=b.dtype)
    out[..., 1:-1] = 0.5 * sfft.dst(x, type=1, axis=-1)
    return out


def halfsin_analysis(f: np.ndarray) -> np.ndarray:
    """Coefficients ``d_n`` with ``f_j = sum_n d_n sin((n + 1/2) pi j / M)``.

    Uses grid values ``j = 1..M``; the value at ``j = 0`` is zero for every
    series in this basis and is ignored.
    """
    return sfft.idst(2.0 * f[..., 1:], type=2, axis=-1)


def halfsin_synthesis(d: np.ndarray, n_out: int | None = None) -> np.ndarray:
    """Evaluate ``sum_n d_n sin((n + 1/2) pi s)`` on a grid of ``n_out`` points."""
    n_in = d.shape[-1] + 1
    n_out = n_in if n_out is None else n_out
    x = np.zeros(d.shape[:-1] + (n_out - 1,), dtype=d.dtype)
    m = min(n_in, n_out) - 1
    x[..., :m] = d[..., :m]
    out = np.zeros(d.shape[:-1] + (n_out,), dtype=d.dtype)
    out[..., 1:] = 0.5 * sfft.dst(x, type=2, axis=-1)
    return out


def halfcos_analysis(f: np.ndarray) -> np.ndarray:
    """Coefficients ``e_n`` with ``f_j = sum_n e_n cos((n + 1/2) pi j / M)``.

    Uses grid values ``j = 0..M-1``; the value at ``j = M`` is zero for every
    series in this basis and is ignored.
    """
    return sfft.idct(2.0 * f[..., :-1], type=2, axis=-1)


def halfcos_synthesis(e: np.ndarray, n_out: int | None = None) -> np.ndarray:
    """Evaluate ``sum_n e_n cos((n + 1/2) pi s)`` on a grid of ``n_out`` points."""
    n_in = e.shape[-1] + 1
    n_out = n_in if n_out is None else n_out
    x = np.zeros(e.shape[:-1] + (n_out - 1,), dtype=e.dtype)
    m = min(n_in, n_out) - 1
    x[..., :m] = e[..., :m]
    out = np.zeros(e.shape[:-1] + (n_out,), dtype=e.dtype)
    out[..., :-1] = 0.5 * sfft.dct(x, type=2, axis=-1)
    return out


def trapezoid_weights(n: int, dz: float) -> np.ndarray:
    w = np.full(n, dz)
    w[0] = w[-1] = 0.5 * dz
    return w


# ---------------------------------------------------------------------------
# Domain
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Domain:
    """Geometry and grid of ``T^2 x (z0, z1)``.

    Parameters
    ----------
    Lx, Ly : float
        Horizontal periods.
    z0, z1 : float
        Vertical interval, ``z1 > z0``.
    Nx, Ny : int
        Horizontal grid sizes (even, at least 4).
    Nz : int
        Number of vertical collocation points including both end points
        (at least 4).
    bc : BC or str
        Vertical boundary condition, ``"Neumann"`` or ``"DirichletNeumann"``.
    """

    Lx: float = 2.0 * np.pi
    Ly: float = 2.0 * np.pi
    z0: float = 0.0
    z1: float = 1.0
    Nx: int = 32
    Ny: int = 32
    Nz: int = 33
    bc: BC = BC.NEUMANN
    _cache: dict = field(default_factory=dict, init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        object.__setattr__(self, "bc", BC.parse(self.bc))
        for name in ("Nx", "Ny", "Nz"):
            val = getattr(self, name)
            if int(val) != val:
                raise ValueError(f"{name} must be an integer, got {val!r}")
            object.__setattr__(self, name, int(val))
        for name in ("Lx", "Ly", "z0", "z1"):
            object.__setattr__(self, name, float(getattr(self, name)))
        if not (self.Lx > 0 and self.Ly > 0):
            raise ValueError("horizontal periods must be positive")
        if not self.z1 > self.z0:
            raise ValueError("require z1 > z0")
        if self.Nx < 4 or self.Ny < 4 or self.Nx % 2 or self.Ny % 2:
            raise ValueError("Nx and Ny must be even and at least 4")
        if self.Nz < 4:
            raise ValueError("Nz must be at least 4")

    # -- geometry -----------------------------------------------------------

    @property
    def h(self) -> float:
        return self.z1 - self.z0

    @property
    def M(self) -> int:
        """Number of vertical grid cells."""
        return self.Nz - 1

    @property
    def dz(self) -> float:
        return self.h / self.M

    @property
    def shape(self) -> tuple[int, int, int]:
        return (self.Nx, self.Ny, self.Nz)

    @property
    def horizontal_shape(self) -> tuple[int, int]:
        return (self.Nx, self.Ny)

    @property
    def n_vertical_modes(self) -> int:
        return self.Nz if self.bc is BC.NEUMANN else self.Nz - 1

    @property
    def spectral_shape(self) -> tuple[int, int, int]:
        return (self.Nx, self.Ny, self.n_vertical_modes)

    @property
    def x(self) -> np.ndarray:
        return np.arange(self.Nx) * (self.Lx / self.Nx)

    @property
    def y(self) -> np.ndarray:
        return np.arange(self.Ny) * (self.Ly / self.Ny)

    @property
    def z(self) -> np.ndarray:
        return self.z0 + self.h * np.arange(self.Nz) / self.M

    def mesh(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Broadcastable coordinate arrays of shape ``(Nx,1,1)``, ``(1,Ny,1)``, ``(1,1,Nz)``."""
        return (
            self.x[:, None, None],
            self.y[None, :, None],
            self.z[None, None, :],
        )

    def replace(self, **changes) -> "Domain":
        params = dict(
            Lx=self.Lx, Ly=self.Ly, z0=self.z0, z1=self.z1,
            Nx=self.Nx, Ny=self.Ny, Nz=self.Nz, bc=self.bc,
        )
        params.update(changes)
        return Domain(**params)

    def to_dict(self) -> dict:
        return dict(
            Lx=self.Lx, Ly=self.Ly, z0=self.z0, z1=self.z1,
            Nx=self.Nx, Ny=self.Ny, Nz=self.Nz, bc=self.bc.value,
        )

    # -- wavenumbers --------------------------------------------------------

    def _cached(self, key, builder):
        if key not in self._cache:
            arr = builder()
            if isinstance(arr, np.ndarray):
                arr.setflags(write=False)
            self._cache[key] = arr
        return self._cache[key]

    @property
    def kx(self) -> np.ndarray:
        """Angular wavenumbers along x, shape ``(Nx, 1)``."""
        return self._cached(
            "kx", lambda: (2 * np.pi / self.Lx * sfft.fftfreq(self.Nx, 1.0 / self.Nx))[:, None]
        )

    @property
    def ky(self) -> np.ndarray:
        """Angular wavenumbers along y, shape ``(1, Ny)``."""
        return self._cached(
            "ky", lambda: (2 * np.pi / self.Ly * sfft.fftfreq(self.Ny, 1.0 / self.Ny))[None, :]
        )

    @property
    def kx_deriv(self) -> np.ndarray:
        """x wavenumbers with the Nyquist mode zeroed (used for odd derivatives)."""
        def build():
            k = np.array(self.kx)
            k[self.Nx // 2, 0] = 0.0
            return k
        return self._cached("kxd", build)

    @property
    def ky_deriv(self) -> np.ndarray:
        def build():
            k = np.array(self.ky)
            k[0, self.Ny // 2] = 0.0
            return k
        return self._cached("kyd", build)

    @property
    def k2(self) -> np.ndarray:
        """``|k|^2`` on the full horizontal spectrum, shape ``(Nx, Ny)``."""
        return self._cached("k2", lambda: self.kx**2 + self.ky**2)

    @property
    def k2_deriv(self) -> np.ndarray:
        """``|k'|^2`` built from the Nyquist-zeroed wavenumbers."""
        return self._cached("k2d", lambda: self.kx_deriv**2 + self.ky_deriv**2)

    @property
    def kz(self) -> np.ndarray:
        """Vertical eigen-wavenumbers of the selected basis."""
        def build():
            n = np.arange(self.n_vertical_modes, dtype=float)
            if self.bc is BC.NEUMANN:
                return n * np.pi / self.h
            return (n + 0.5) * np.pi / self.h
        return self._cached("kz", build)

    @property
    def dealias_mask(self) -> np.ndarray:
        """2/3-rule mask on the spectral grid (horizontal and vertical)."""
        def build():
            mx = np.abs(sfft.fftfreq(self.Nx, 1.0 / self.Nx)) < self.Nx / 3.0
            my = np.abs(sfft.fftfreq(self.Ny, 1.0 / self.Ny)) < self.Ny / 3.0
            mz = np.arange(self.n_vertical_modes) < 2.0 * self.M / 3.0
            return mx[:, None, None] & my[None, :, None] & mz[None, None, :]
        return self._cached("dealias", build)

    # -- transforms ---------------------------------------------------------

    def check_physical(self, data: np.ndarray) -> None:
        if data.shape[-3:] != self.shape:
            raise ShapeError(f"field grid {data.shape[-3:]} does not match domain grid {self.shape}")

    def check_spectral(self, coeffs: np.ndarray) -> None:
        if coeffs.shape[-3:] != self.spectral_shape:
            raise ShapeError(
                f"coefficient grid {coeffs.shape[-3:]} does not match {self.spectral_shape}"
            )

    def vertical_forward(self, f: np.ndarray) -> np.ndarray:
        if self.bc is BC.NEUMANN:
            return cos_analysis(f)
        return halfsin_analysis(f)

    def vertical_inverse(self, c: np.ndarray, n_out: int | None = None) -> np.ndarray:
        if self.bc is BC.NEUMANN:
            return cos_synthesis(c, n_out)
        return halfsin_synthesis(c, n_out)

    def forward(self, data: np.ndarray) -> np.ndarray:
        """Grid values ``(..., Nx, Ny, Nz)`` to complex coefficients."""
        self.check_physical(data)
        c = self.vertical_forward(np.asarray(data, dtype=float))
        return sfft.fft2(c, axes=(-3, -2), norm="forward")

    def inverse(self, coeffs: np.ndarray) -> np.ndarray:
        """Complex coefficients back to real grid values."""
        self.check_spectral(coeffs)
        g = sfft.ifft2(coeffs, axes=(-3, -2), norm="forward")
        return self.vertical_inverse(np.ascontiguousarray(g.real))

    def horizontal_forward(self, data: np.ndarray) -> np.ndarray:
        """Horizontal transform of arrays whose last two axes are ``(Nx, Ny)``."""
        return sfft.fft2(data, axes=(-2, -1), norm="forward")

    def horizontal_inverse(self, coeffs: np.ndarray) -> np.ndarray:
        return sfft.ifft2(coeffs, axes=(-2, -1), norm="forward").real

    @property
    def vertical_weights(self) -> np.ndarray:
        """Trapezoid weights on the vertical grid.

        They integrate every resolved cosine exactly, so the vertical
        integral equals ``h`` times the zeroth cosine coefficient.
        """
        return self._cached("wz", lambda: trapezoid_weights(self.Nz, self.dz))

    def integrate_z(self, data: np.ndarray) -> np.ndarray:
        return np.tensordot(data, self.vertical_weights, axes=([-1], [0]))

    def refine_z(self, data: np.ndarray, factor: int) -> np.ndarray:
        """Spectral interpolation onto a vertical grid with ``factor`` times as many cells."""
        if factor == 1:
            return np.asarray(data)
        n_out = factor * self.M + 1
        return self.vertical_inverse(self.vertical_forward(np.asarray(data, dtype=float)), n_out)


# ---------------------------------------------------------------------------
# Field-level wrappers
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SpectralField:
    """Fourier x eigenbasis coefficients of a (possibly vector) field.

    ``coeffs`` has shape ``(ncomp, Nx, Ny, n_vertical_modes)``.
    """

    coeffs: np.ndarray
    domain: Domain

    def __post_init__(self) -> None:
        c = np.asarray(self.coeffs, dtype=complex)
        if c.ndim == 3:
            c = c[None]
        self.domain.check_spectral(c)
        object.__setattr__(self, "coeffs", c)

    @property
    def ncomp(self) -> int:
        return self.coeffs.shape[0]


def to_spectral(f) -> SpectralField:
    """Transform a :class:`~hydrostokes.field.PhysicalField` to coefficients."""
    return SpectralField(f.domain.forward(f.data), f.domain)


def from_spectral(F: SpectralField):
    """Inverse of :func:`to_spectral`."""
    from .field import PhysicalField

    return PhysicalField(F.domain.inverse(F.coeffs), F.domain)


def vertical_integral(f):
    """Integral over ``(z0, z1)`` at every horizontal grid point."""
    from .field import HorizontalField

    return HorizontalField(f.domain.integrate_z(f.data), f.domain)
