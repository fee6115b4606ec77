"""Initial data and test-data generators."""

from __future__ import annotations

import numpy as np

from .domain import Domain
from .field import PhysicalField, norm_inf_p
from .hops import helmholtz_project


def taylor_green(domain: Domain, amplitude: float = 1.0) -> PhysicalField:
    """``v = A (cos x sin y, -sin x cos y)``, independent of ``z``.

    On a box of periods ``(Lx, Ly)`` the coordinates are rescaled to
    ``2 pi x / Lx`` and ``2 pi y / Ly``.
    """
    X, Y, _ = domain.mesh()
    X = 2 * np.pi * X / domain.Lx
    Y = 2 * np.pi * Y / domain.Ly
    ones = np.ones(domain.shape)
    v1 = np.cos(X) * np.sin(Y) * ones
    v2 = -np.sin(X) * np.cos(Y) * ones
    return PhysicalField(amplitude * np.stack([v1, v2]), domain)


def taylor_green_decay_rate(domain: Domain) -> float:
    """Decay rate ``|k|^2`` of the Taylor--Green modes."""
    return (2 * np.pi / domain.Lx) ** 2 + (2 * np.pi / domain.Ly) ** 2


def z_profile(domain: Domain, modes=((1, 0.5, 0.0), (2, 0.0, 0.25))) -> PhysicalField:
    """Horizontally constant velocity built from vertical cosines.

    ``modes`` lists ``(n, a1, a2)``: component ``i`` receives
    ``a_i cos(n pi (z - z0) / h)``.
    """
    _, _, Z = domain.mesh()
    s = (Z - domain.z0) / domain.h
    v = np.zeros((2,) + domain.shape)
    for n, a1, a2 in modes:
        col = np.cos(n * np.pi * s) * np.ones(domain.shape)
        v[0] += a1 * col
        v[1] += a2 * col
    return PhysicalField(v, domain)


def random_smooth(domain: Domain, rng: np.random.Generator, ncomp: int = 2,
                  bandlimit: int = 4, nz_modes: int = 4, decay: float = 1.0) -> np.ndarray:
    """Random real field with a few low horizontal and vertical modes."""
    coeffs = np.zeros((ncomp,) + domain.spectral_shape, dtype=complex)
    kx = np.fft.fftfreq(domain.Nx, 1.0 / domain.Nx)
    ky = np.fft.fftfreq(domain.Ny, 1.0 / domain.Ny)
    mask_h = (np.abs(kx)[:, None] <= bandlimit) & (np.abs(ky)[None, :] <= bandlimit)
    kk = np.sqrt(kx[:, None] ** 2 + ky[None, :] ** 2)
    nz = min(nz_modes, domain.n_vertical_modes)
    amp = (1.0 + kk) ** (-decay) * mask_h
    for c in range(ncomp):
        re = rng.standard_normal((domain.Nx, domain.Ny, nz))
        im = rng.standard_normal((domain.Nx, domain.Ny, nz))
        coeffs[c, :, :, :nz] = (re + 1j * im) * amp[..., None] / (1.0 + np.arange(nz)) ** decay
    g = np.fft.ifft2(coeffs, axes=(-3, -2), norm="forward").real
    return domain.vertical_inverse(np.ascontiguousarray(g))


def random_solenoidal(domain: Domain, rng: np.random.Generator, amplitude: float = 0.1,
                      bandlimit: int = 4, nz_modes: int = 4, mean_free: bool = False) -> PhysicalField:
    """Random smooth field with divergence-free vertical average.

    The field is rescaled so that ``||a||_{inf,1} = amplitude``. With
    ``mean_free=True`` the vertical average itself is removed.
    """
    data = random_smooth(domain, rng, 2, bandlimit, nz_modes)
    f = helmholtz_project(PhysicalField(data, domain))
    if mean_free:
        mean = domain.integrate_z(f.data) / domain.h
        f = f.with_data(f.data - mean[..., None])
    norm = norm_inf_p(f, 1.0)
    return f * (amplitude / norm)


def rough_split(domain: Domain, a1_bandlimit: int = 2, a2_amplitude: float = 0.0,
                seed: int = 0, a1_amplitude: float = 0.1) -> tuple[PhysicalField, PhysicalField]:
    """Split data ``a = a1 + a2``.

    ``a1`` is a band-limited smooth field. ``a2`` is full-spectrum noise.
    Both have divergence-free vertical averages, and
    ``||a2||_{inf,1} = a2_amplitude``.
    """
    rng = np.random.default_rng(seed)
    a1 = random_solenoidal(domain, rng, a1_amplitude, a1_bandlimit, nz_modes=3)
    noise = helmholtz_project(PhysicalField(rng.uniform(-1.0, 1.0, (2,) + domain.shape), domain))
    n = norm_inf_p(noise, 1.0)
    a2 = noise * (a2_amplitude / n if n > 0 else 0.0)
    return a1, a2


# ---------------------------------------------------------------------------
# Rough data for decay-exponent fits
# ---------------------------------------------------------------------------


def square_wave(n: int, duty: float = 0.5, shift: int = 0) -> np.ndarray:
    """One period of a +-1 square wave on ``n`` periodic grid points.

    The wave is ``+1`` on a fraction ``duty`` of the period. Both jumps sit
    on grid points, where the value is the mean ``0`` of the two sides.
    """
    n_up = int(round(duty * n))
    if not 2 <= n_up <= n - 2:
        raise ValueError("each half of the square wave needs at least two grid points")
    j = (np.arange(n) - shift) % n
    v = np.where(j < n_up, 1.0, -1.0)
    v[(j == 0) | (j == n_up)] = 0.0
    return v


def random_signs(n: int, rng: np.random.Generator) -> np.ndarray:
    """I.i.d. +-1 grid samples."""
    return rng.choice([-1.0, 1.0], size=n)


def step(n: int, index: int) -> np.ndarray:
    """``+1`` below grid point ``index``, ``-1`` above, ``0`` at the jump."""
    if not 0 < index < n - 1:
        raise ValueError("the jump must lie at an interior grid point")
    v = np.ones(n)
    v[index + 1:] = -1.0
    v[index] = 0.0
    return v


def spike(n: int, index: int, dz: float) -> np.ndarray:
    """Grid approximation of a unit point mass: a single-cell hat of area one."""
    f = np.zeros(n)
    f[index] = 1.0 / dz
    return f
