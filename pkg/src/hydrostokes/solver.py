"""Mild solutions of the primitive equations.

The velocity ``v`` solves ``v(t) = S(t) a - int_0^t S(t-s) P div(u (x) v)(s) ds``
with ``u = (v, w)``. The vertical velocity ``w`` is reconstructed from ``v``.
Two solvers are provided:

* :func:`picard_solve` runs the fixed-point iteration on a fixed time grid
  and records the monitors of every sweep.
* :func:`etd_solve` is a second-order exponential time stepper (ETD2RK).

The Duhamel integral on each step interpolates the forcing polynomially
through Gauss--Legendre nodes and integrates it exactly against the
semigroup, using the phi-functions of exponential integrators.
"""

from __future__ import annotations

import math
import struct
import warnings
from dataclasses import dataclass, field as dc_field
from pathlib import Path

import numpy as np
from scipy import fft as sfft

from .domain import BC, Domain, halfcos_synthesis, sin_synthesis
from .field import PhysicalField, column_norms, gradient_from_coeffs, norm_report
from .hops import div_h_of_mean, helmholtz_project, projection_correction_coeffs
from .semigroup import StokesSemigroup
from .vcalc import heat_of_derivative

CONSTRAINT_TOL = 1e-6


class NonConvergenceError(RuntimeError):
    """Picard iteration diverged; carries the trace up to the failure."""

    def __init__(self, message: str, trace: "IterationTrace"):
        super().__init__(message)
        self.trace = trace


class BlowUpError(RuntimeError):
    """The time stepper produced a non-finite state."""

    def __init__(self, message: str, last_time: float, solution: "MildSolution"):
        super().__init__(message)
        self.last_time = last_time
        self.solution = solution


class ConstraintWarning(UserWarning):
    """The vertical average of ``v`` is not horizontally divergence free."""


# ---------------------------------------------------------------------------
# Containers
# ---------------------------------------------------------------------------


@dataclass
class MildSolution:
    """Snapshots ``v(t_j)`` on an increasing time grid.

    ``snapshots`` has shape ``(n_times, 2, Nx, Ny, Nz)``. ``provenance`` is
    ``"picard:<sweep>"`` or ``"etd"``.
    """

    times: np.ndarray
    snapshots: np.ndarray
    domain: Domain
    provenance: str

    def __len__(self) -> int:
        return len(self.times)

    def field(self, j: int) -> PhysicalField:
        return PhysicalField(self.snapshots[j], self.domain)

    @property
    def final(self) -> PhysicalField:
        return self.field(-1)

    def constraint_residual(self) -> float:
        """Largest ``|div_H vbar|`` over all snapshots."""
        return max(float(np.abs(div_h_of_mean(self.field(j))).max()) for j in range(len(self)))


@dataclass
class IterationTrace:
    """Per-sweep monitors of the Picard iteration.

    Entry ``m`` of each list belongs to the iterate ``v_m`` (``v_0 = S(t) a``).
    ``difference[m]`` is ``N(v_m - v_{m-1})`` and ``contraction[m]`` the ratio
    of consecutive differences (NaN where undefined).
    """

    H: list = dc_field(default_factory=list)
    K: list = dc_field(default_factory=list)
    M: list = dc_field(default_factory=list)
    L: list = dc_field(default_factory=list)
    difference: list = dc_field(default_factory=list)
    contraction: list = dc_field(default_factory=list)
    converged: bool = False
    warnings: list = dc_field(default_factory=list)

    @property
    def sweeps(self) -> int:
        return max(len(self.H) - 1, 0)

    def append(self, mon: dict, diff: float) -> None:
        self.H.append(mon["H"])
        self.K.append(mon["K"])
        self.M.append(mon["M"])
        self.L.append(mon["L"])
        prev = self.difference[-1] if self.difference else math.nan
        self.difference.append(diff)
        ratio = diff / prev if (np.isfinite(prev) and prev > 0) else math.nan
        self.contraction.append(ratio)

    def rows(self) -> list[dict]:
        return [
            {"m": m, "H_m": self.H[m], "K_m": self.K[m], "M_m": self.M[m],
             "L_m": self.L[m], "contraction": self.contraction[m]}
            for m in range(len(self.H))
        ]


@dataclass(frozen=True)
class RecursionResult:
    """Iterates of the scalar majorant recursion for ``(H_m, K_m)``."""

    A: float
    eps: float
    C1: float
    C2: float
    H: np.ndarray
    K: np.ndarray
    bounded: bool
    x0: float | None
    eps0: float

    def to_dict(self) -> dict:
        return {
            "A": self.A, "eps": self.eps, "C1": self.C1, "C2": self.C2,
            "iterations": int(len(self.H) - 1),
            "bounded": bool(self.bounded),
            "x0": None if self.x0 is None else float(self.x0),
            "eps0": float(self.eps0),
            "H_max": float(np.max(self.H)), "K_max": float(np.max(self.K)),
            "H_last": float(self.H[-1]), "K_last": float(self.K[-1]),
        }


# ---------------------------------------------------------------------------
# Vertical velocity and nonlinearity
# ---------------------------------------------------------------------------


def _w_from_div(domain: Domain, div_coeffs: np.ndarray) -> np.ndarray:
    """Grid values of ``w = int_z^{z1} div_H v`` from eigen-coefficients of ``div_H v``.

    ``div_coeffs`` holds horizontal Fourier x vertical eigen-coefficients.
    The result is still in horizontal Fourier space.
    """
    kz = domain.kz
    if domain.bc is BC.NEUMANN:
        s = (domain.z - domain.z0) / domain.h
        lin = div_coeffs[..., :1] * (domain.h * (1.0 - s))
        return lin + sin_synthesis(-div_coeffs[..., 1:-1] / kz[1:-1])
    return halfcos_synthesis(div_coeffs / kz)


def _div_coeffs(domain: Domain, coeffs: np.ndarray) -> np.ndarray:
    return 1j * domain.kx_deriv[..., None] * coeffs[0] + 1j * domain.ky_deriv[..., None] * coeffs[1]


def reconstruct_w(v: PhysicalField) -> PhysicalField:
    """Vertical velocity ``w(z) = int_z^{z1} div_H v dz'``.

    The series is integrated term by term, so ``w(z1) = 0`` exactly and
    ``w(z0) = h * div_H vbar``.
    """
    if v.ncomp != 2:
        raise ValueError("reconstruct_w needs a 2-component velocity")
    d = v.domain
    w = _w_from_div(d, _div_coeffs(d, d.forward(v.data)))
    return PhysicalField(sfft.ifft2(w, axes=(-3, -2), norm="forward").real, d)


def _hdiv_of_products(domain: Domain, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """``(div_H (a (x) b))_i = sum_j d_j (a_j b_i)`` on grid values."""
    kx = domain.kx_deriv[..., None]
    ky = domain.ky_deriv[..., None]
    out = np.empty_like(b)
    for i in range(2):
        px = sfft.fft2(a[0] * b[i], axes=(-3, -2), norm="forward")
        py = sfft.fft2(a[1] * b[i], axes=(-3, -2), norm="forward")
        out[i] = sfft.ifft2(1j * kx * px + 1j * ky * py, axes=(-3, -2), norm="forward").real
    return out


def _bilinear_values(domain: Domain, ct: np.ndarray, c: np.ndarray) -> np.ndarray:
    """Grid values of ``div(u~ (x) v)`` from (dealiased) coefficients of ``v~`` and ``v``."""
    vt = domain.inverse(ct)
    v = vt if c is ct else domain.inverse(c)
    w_hat = _w_from_div(domain, _div_coeffs(domain, ct))
    wt = sfft.ifft2(w_hat, axes=(-3, -2), norm="forward").real
    out = _hdiv_of_products(domain, vt, v)
    out += heat_of_derivative(wt[None] * v, domain.h, 0.0, domain.bc)
    return out


def _check_constraint(f: PhysicalField, record: list | None = None) -> float:
    r = float(np.abs(div_h_of_mean(f)).max())
    if r > CONSTRAINT_TOL:
        msg = f"div_H of the vertical average is {r:.3e} > {CONSTRAINT_TOL:g}"
        warnings.warn(msg, ConstraintWarning, stacklevel=3)
        if record is not None:
            record.append(msg)
    return r


def bilinear(vt: PhysicalField, v: PhysicalField, dealias: bool = True) -> PhysicalField:
    """``div(u~ (x) v) = div_H(v~ (x) v) + d_z(w~ v)`` with ``w~`` from ``v~``.

    With ``dealias=True`` both inputs and the result are truncated by the
    2/3 rule.
    """
    d = v.domain
    ct = d.forward(vt.data)
    c = ct if vt is v else d.forward(v.data)
    if dealias:
        ct = ct * d.dealias_mask
        c = ct if vt is v else c * d.dealias_mask
    out = _bilinear_values(d, ct, c)
    if dealias:
        out = d.inverse(d.forward(out) * d.dealias_mask)
    return PhysicalField(out, d)


def nonlinearity(v: PhysicalField, dealias: bool = True, record: list | None = None) -> PhysicalField:
    """Conservative nonlinearity ``div_H(v (x) v) + d_z(w v)``.

    A :class:`ConstraintWarning` is issued (and appended to ``record``) if
    ``div_H vbar`` exceeds ``1e-6``; the computation proceeds regardless.
    """
    if v.ncomp != 2:
        raise ValueError("nonlinearity needs a 2-component velocity")
    _check_constraint(v, record)
    return bilinear(v, v, dealias)


def recover_pressure_grad(v: PhysicalField, dealias: bool = True) -> PhysicalField:
    """Horizontal pressure gradient ``grad_H pi = (P - I) div(u (x) v)``.

    The result is independent of ``z``.
    """
    n = nonlinearity(v, dealias)
    return helmholtz_project(n) - n


class _Forcing:
    """Spectral coefficients of ``P div(u (x) v)`` with dealiasing."""

    def __init__(self, domain: Domain, dealias: bool = True):
        self.domain = domain
        self.mask = domain.dealias_mask if dealias else None
        self.warnings: list = []

    def __call__(self, coeffs: np.ndarray) -> np.ndarray:
        d = self.domain
        c = coeffs * self.mask if self.mask is not None else coeffs
        vals = _bilinear_values(d, c, c)
        out = d.forward(vals)
        # Under Neumann the trapezoid vertical mean is the n = 0 coefficient.
        out[..., 0] += projection_correction_coeffs(out[..., 0], d)
        if self.mask is not None:
            out *= self.mask
        return out


# ---------------------------------------------------------------------------
# Exponential quadrature
# ---------------------------------------------------------------------------


def phi_functions(z: np.ndarray, k_max: int) -> list[np.ndarray]:
    """``phi_0 .. phi_{k_max}`` at real ``z <= 0``.

    ``phi_k(z) = sum_n z^n / (n + k)!``. A Taylor series is used for
    ``|z| < 2`` and the recurrence ``phi_{k+1} = (phi_k - 1/k!) / z`` elsewhere.
    """
    z = np.asarray(z, dtype=float)
    small = np.abs(z) < 2.0
    zs = np.where(small, z, 0.0)
    zl = np.where(small, 1.0, z)
    out = []
    rec = np.exp(z)
    out.append(rec)
    for k in range(1, k_max + 1):
        rec = (rec - 1.0 / math.factorial(k - 1)) / zl
        taylor = np.zeros_like(z)
        term_pow = np.ones_like(z)
        for n in range(30):
            taylor = taylor + term_pow / math.factorial(n + k)
            term_pow = term_pow * zs
        val = np.where(small, taylor, rec)
        out.append(val)
        rec = val
    return out


def gauss_legendre_unit(n: int) -> np.ndarray:
    """Gauss--Legendre nodes mapped to ``(0, 1)``."""
    x, _ = np.polynomial.legendre.leggauss(n)
    return 0.5 * (x + 1.0)


class DuhamelStepper:
    """One-step Duhamel update on an interval of fixed length ``delta``.

    ``advance(c0, F)`` returns the coefficients at ``t + delta`` and at the
    interior nodes ``t + delta * theta_q``. ``F`` holds the forcing at the
    nodes, and the value returned is
    ``S(tau) c0 - int_0^tau S(tau - s) F(s) ds`` with ``F`` replaced by its
    interpolating polynomial; the integral is exact for that polynomial.
    """

    def __init__(self, domain: Domain, delta: float, n_quad: int = 3):
        if not delta > 0:
            raise ValueError(f"step length must be positive, got {delta}")
        if n_quad < 1:
            raise ValueError("need at least one quadrature node")
        self.domain = domain
        self.delta = float(delta)
        self.n_quad = int(n_quad)
        self.theta = gauss_legendre_unit(n_quad)
        lam = StokesSemigroup(domain).eigenvalues
        V = np.vander(self.theta, n_quad, increasing=True)
        B = np.linalg.inv(V)
        taus = np.append(self.theta, 1.0) * self.delta
        self.decay = []
        self.weights = []
        for tau in taus:
            phis = phi_functions(-lam * tau, n_quad)
            mono = [tau * (tau / self.delta) ** r * math.factorial(r) * phis[r + 1] for r in range(n_quad)]
            self.decay.append(phis[0])
            self.weights.append([sum(B[r, q] * mono[r] for r in range(n_quad)) for q in range(n_quad)])

    def advance(self, c0: np.ndarray, F: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        outs = []
        for p in range(self.n_quad + 1):
            acc = self.decay[p] * c0
            for q in range(self.n_quad):
                acc = acc - self.weights[p][q] * F[q]
            outs.append(acc)
        return outs[-1], np.stack(outs[:-1])


def duhamel_step(a_t: PhysicalField, forcing_nodes, delta: float, n_quad: int | None = None) -> PhysicalField:
    """``S(delta) a_t - int_0^delta S(delta - s) F(s) ds`` from node samples of ``F``.

    ``forcing_nodes`` lists ``F = P div(u (x) v)`` at the Gauss--Legendre
    nodes ``t + delta * theta_q`` (see :func:`gauss_legendre_unit`).
    """
    if not delta > 0:
        raise ValueError(f"step length must be positive, got {delta}")
    n_quad = len(forcing_nodes) if n_quad is None else n_quad
    if len(forcing_nodes) != n_quad:
        raise ValueError("one forcing sample per quadrature node is required")
    d = a_t.domain
    stepper = DuhamelStepper(d, delta, n_quad)
    F = np.stack([d.forward(f.data) for f in forcing_nodes])
    end, _ = stepper.advance(d.forward(a_t.data), F)
    return PhysicalField(d.inverse(end), d)


# ---------------------------------------------------------------------------
# Monitors
# ---------------------------------------------------------------------------


def _norms_from_coeffs(domain: Domain, coeffs: np.ndarray, oversample: int) -> tuple[float, float]:
    """``(||v||_{inf,1}, ||v||_{1,inf,1})`` from spectral coefficients."""
    v = PhysicalField(domain.inverse(coeffs), domain)
    g = gradient_from_coeffs(domain, coeffs)
    n0 = column_norms(v, 1.0, oversample).max()
    n1 = column_norms(PhysicalField(g.reshape((-1,) + domain.shape), domain), 1.0, oversample).max()
    return float(n0), float(n0 + n1)


def _monitors(domain: Domain, times: np.ndarray, coeffs: np.ndarray, mu: float, oversample: int) -> dict:
    H = K = M = L = 0.0
    for tau, c in zip(times, coeffs):
        if tau <= 0:
            continue
        n0, n1 = _norms_from_coeffs(domain, c, oversample)
        H = max(H, n0)
        K = max(K, math.sqrt(tau) * n1)
        M = max(M, math.sqrt(tau) * n0)
        L = max(L, tau**mu * n1)
    return {"H": H, "K": K, "M": M, "L": L}


def _n_norm(domain: Domain, times: np.ndarray, coeffs: np.ndarray, oversample: int) -> float:
    """``N(v) = max(K(v), H(v))`` with grid suprema in time."""
    mon = _monitors(domain, times, coeffs, 0.0, oversample)
    return max(mon["H"], mon["K"])


# ---------------------------------------------------------------------------
# Picard iteration
# ---------------------------------------------------------------------------


def _time_grid(T: float, dt: float | None, n_steps: int | None) -> tuple[int, float]:
    if not T > 0:
        raise ValueError(f"final time must be positive, got {T}")
    if n_steps is None:
        if dt is None or not dt > 0:
            raise ValueError("give a positive dt or n_steps")
        n_steps = max(1, int(math.ceil(T / dt - 1e-12)))
    if n_steps < 1:
        raise ValueError("n_steps must be at least 1")
    return int(n_steps), T / n_steps


def _check_initial(a: PhysicalField, tol: float = 1e-8) -> None:
    if a.ncomp != 2:
        raise ValueError("initial velocity must have 2 components")
    if a.domain.bc is not BC.NEUMANN:
        raise ValueError("the solvers require Neumann vertical boundary conditions")
    r = float(np.abs(div_h_of_mean(a)).max())
    if r > tol:
        raise ValueError(f"initial data violates div_H abar = 0 (residual {r:.3e})")


def picard_solve(a: PhysicalField, T: float, M_sweeps: int = 50, dt: float | None = 0.05,
                 n_steps: int | None = None, n_quad: int = 3, mu: float = 0.25,
                 atol: float = 1e-8, rtol: float = 1e-6, oversample: int = 1,
                 dealias: bool = True, growth_factor: float = 10.0) -> tuple[MildSolution, IterationTrace]:
    """Picard iteration ``v_{m+1} = S(t) a - int_0^t S(t-s) P div(u_m (x) v_m) ds``.

    Starts from ``v_0(t) = S(t) a``. Whole trajectories are stored on the
    grid of step end points plus ``n_quad`` Gauss--Legendre nodes per step.
    The iteration stops when ``N(v_{m+1} - v_m) < atol`` or
    ``< rtol * N(v_{m+1})``, or after ``M_sweeps`` sweeps.

    Returns
    -------
    (MildSolution, IterationTrace)
        The solution holds the last iterate at the step end points.

    Raises
    ------
    NonConvergenceError
        If ``K_m`` grows by more than ``growth_factor`` over three sweeps or
        the iterates stop being finite.
    """
    _check_initial(a)
    d = a.domain
    n_steps, delta = _time_grid(T, dt, n_steps)
    stepper = DuhamelStepper(d, delta, n_quad)
    forcing = _Forcing(d, dealias)
    theta = stepper.theta
    t_end = delta * np.arange(n_steps + 1)
    t_nodes = (t_end[:-1, None] + delta * theta[None, :])
    all_times = np.concatenate([t_end, t_nodes.ravel()])

    sg = StokesSemigroup(d)
    ca = d.forward(a.data)
    ends = np.stack([sg.apply_coeffs(ca, t) for t in t_end])
    nodes = np.stack([[sg.apply_coeffs(ca, t) for t in row] for row in t_nodes])

    def stack_all(e, n):
        return np.concatenate([e, n.reshape((-1,) + e.shape[1:])])

    trace = IterationTrace()
    cur = stack_all(ends, nodes)
    trace.append(_monitors(d, all_times, cur, mu, oversample), math.nan)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", ConstraintWarning)
        for m in range(1, M_sweeps + 1):
            F = np.stack([[forcing(c) for c in row] for row in nodes])
            new_ends = np.empty_like(ends)
            new_nodes = np.empty_like(nodes)
            new_ends[0] = ca
            for j in range(n_steps):
                new_ends[j + 1], new_nodes[j] = stepper.advance(new_ends[j], F[j])
            new = stack_all(new_ends, new_nodes)
            if not np.all(np.isfinite(new)):
                trace.warnings.extend(str(w.message) for w in caught)
                raise NonConvergenceError(f"non-finite iterate at sweep {m}", trace)
            diff = _n_norm(d, all_times, new - cur, oversample)
            mon = _monitors(d, all_times, new, mu, oversample)
            trace.append(mon, diff)
            ends, nodes, cur = new_ends, new_nodes, new
            n_new = max(mon["H"], mon["K"])
            if diff < atol or diff < rtol * n_new:
                trace.converged = True
                break
            if m >= 3 and trace.K[m] > growth_factor * max(trace.K[m - 3], 1e-300):
                trace.warnings.extend(str(w.message) for w in caught)
                raise NonConvergenceError(f"K_m grew by more than {growth_factor}x over 3 sweeps", trace)
            if not np.isfinite(n_new) or n_new > 1e12:
                trace.warnings.extend(str(w.message) for w in caught)
                raise NonConvergenceError(f"iterates unbounded at sweep {m}", trace)
        trace.warnings.extend(str(w.message) for w in caught)
    snaps = np.stack([d.inverse(c) for c in ends])
    sol = MildSolution(t_end, snaps, d, f"picard:{trace.sweeps}")
    return sol, trace


# ---------------------------------------------------------------------------
# Exponential time differencing
# ---------------------------------------------------------------------------


def etd_solve(a: PhysicalField, T: float, dt: float, dealias: bool = True,
              save_every: int = 1) -> MildSolution:
    """ETD2RK (Cox--Matthews) for ``c' = -lambda c - F(c)`` in spectral space.

    Raises
    ------
    BlowUpError
        If the state becomes non-finite; the partial trajectory is attached.
    """
    _check_initial(a)
    d = a.domain
    n_steps, h = _time_grid(T, dt, None)
    lam = StokesSemigroup(d).eigenvalues
    e, p1, p2 = phi_functions(-lam * h, 2)
    forcing = _Forcing(d, dealias)
    c = d.forward(a.data)
    times = [0.0]
    snaps = [a.data.copy()]
    for n in range(n_steps):
        Fc = forcing(c)
        an = e * c - h * p1 * Fc
        c_new = an - h * p2 * (forcing(an) - Fc)
        t = (n + 1) * h
        if not np.all(np.isfinite(c_new)):
            sol = MildSolution(np.array(times), np.stack(snaps), d, "etd")
            raise BlowUpError(f"non-finite state at t = {t:.6g}", times[-1], sol)
        c = c_new
        if (n + 1) % save_every == 0 or n + 1 == n_steps:
            times.append(t)
            snaps.append(d.inverse(c))
    return MildSolution(np.array(times), np.stack(snaps), d, "etd")


def continue_global(a: PhysicalField, T: float, dt: float, window: float = 1.0,
                    oversample: int = 1) -> tuple[MildSolution, list[float]]:
    """Long ETD run with ``sup ||v||_{1,inf,1}`` reported per time window."""
    sol = etd_solve(a, T, dt)
    d = a.domain
    n_win = max(1, int(math.ceil(T / window - 1e-12)))
    sups = [0.0] * n_win
    for t, snap in zip(sol.times, sol.snapshots):
        k = min(int(t / window), n_win - 1)
        _, n1 = _norms_from_coeffs(d, d.forward(snap), oversample)
        sups[k] = max(sups[k], n1)
    return sol, sups


# ---------------------------------------------------------------------------
# Scalar recursion
# ---------------------------------------------------------------------------


def _x0(eps: float, A: float, C2: float, tol: float = 1e-15) -> float | None:
    """Smallest positive root of ``x = eps + sqrt(2A) C2 x^{3/2} + x/2``."""
    if eps == 0:
        return 0.0
    c = math.sqrt(2.0 * A) * C2
    x_star = 1.0 / (9.0 * c * c)

    def g(x):
        return eps + c * x**1.5 - 0.5 * x

    if g(x_star) > 0:
        return None
    lo, hi = 0.0, x_star
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if g(mid) > 0:
            lo = mid
        else:
            hi = mid
        if hi - lo < tol * max(hi, 1e-300):
            break
    return hi


def intersection_threshold(A: float, C2: float) -> float:
    """Largest ``eps`` for which ``x0(eps)`` exists: ``1 / (54 * 2A * C2^2)``."""
    return 1.0 / (54.0 * 2.0 * A * C2 * C2)


def majorant_recursion(A: float, eps: float, C1: float = 1.0, C2: float = 1.0,
                      m_max: int = 10_000, cap: float = 1e8) -> RecursionResult:
    """Iterate the majorant maps with equality from ``H_0 = A``, ``K_0 = eps``.

    ``H_{m+1} = A + C1 H_m K_m`` and
    ``K_{m+1} = eps + C2 K_m^{3/2} H_m^{1/2} + K_m H_m / (4A)``.
    The sequences are declared unbounded once either exceeds ``cap``.
    """
    if not (A > 0 and C1 > 0 and C2 > 0):
        raise ValueError("A, C1 and C2 must be positive")
    if eps < 0:
        raise ValueError("eps must be nonnegative")
    H = np.empty(m_max + 1)
    K = np.empty(m_max + 1)
    H[0], K[0] = A, eps
    bounded = True
    last = m_max
    for m in range(m_max):
        h, k = H[m], K[m]
        H[m + 1] = A + C1 * h * k
        K[m + 1] = eps + C2 * k**1.5 * math.sqrt(h) + k * h / (4.0 * A)
        if not (H[m + 1] <= cap and K[m + 1] <= cap):
            bounded = False
            last = m + 1
            break
    H, K = H[: last + 1], K[: last + 1]
    return RecursionResult(A, eps, C1, C2, H, K, bounded, _x0(eps, A, C2), intersection_threshold(A, C2))


def recursion_threshold(A: float = 1.0, C1: float = 1.0, C2: float = 1.0, m_max: int = 10_000,
                        hi: float = 1.0, n_bisect: int = 60) -> float:
    """Bisection for the ``eps`` at which the direct recursion stops being bounded."""
    lo = 0.0
    if majorant_recursion(A, hi, C1, C2, m_max).bounded:
        raise ValueError("recursion is bounded at the upper search limit")
    for _ in range(n_bisect):
        mid = 0.5 * (lo + hi)
        if majorant_recursion(A, mid, C1, C2, m_max).bounded:
            lo = mid
        else:
            hi = mid
    return lo


# ---------------------------------------------------------------------------
# Life span and rough-data threshold
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class LifespanResult:
    triple_norm: float
    T_bound: float
    T_run: float
    converged: bool
    sweeps: int


def lifespan_bound(triple_norm: float, mu: float, c_star: float, form: str = "min") -> float:
    """``T = s^{-2/(1/2 - mu)}`` with ``s = min(c_* |||a|||, 1)``.

    ``form="max"`` uses ``s = max(c_* |||a|||, 1)``, which gives a bound that
    shrinks with the data size instead of saturating at one.
    """
    mu = float(mu)
    if not 0.0 <= mu < 0.5:
        raise ValueError(f"mu must lie in [0, 1/2), got {mu}")
    x = c_star * triple_norm
    if form == "min":
        s = min(x, 1.0)
    elif form == "max":
        s = max(x, 1.0)
    else:
        raise ValueError(f"unknown form {form!r}")
    if s <= 0:
        return math.inf
    return s ** (-2.0 / (0.5 - mu))


def calibrate_c_star(triple_norm: float, T_emp: float, mu: float) -> float:
    """``c_*`` for which ``max(c_* |||a|||, 1)^{-2/(1/2-mu)} = T_emp`` (needs ``T_emp <= 1``)."""
    if not 0 < T_emp <= 1:
        raise ValueError("calibration requires 0 < T_emp <= 1")
    return T_emp ** (-(0.5 - mu) / 2.0) / triple_norm


def triple_norm(a: PhysicalField, mu: float, t_grid=None) -> float:
    return norm_report(a, mu, t_grid=t_grid).triple


def picard_converges(a: PhysicalField, T: float, **kwargs) -> tuple[bool, IterationTrace]:
    """Run :func:`picard_solve` and report convergence instead of raising."""
    try:
        _, trace = picard_solve(a, T, **kwargs)
    except NonConvergenceError as exc:
        return False, exc.trace
    return trace.converged, trace


def lifespan_estimate(a: PhysicalField, mu: float, c_star: float, T_cap: float = 1.0,
                      run: bool = True, form: str = "min", t_grid=None, **solver_kwargs) -> LifespanResult:
    """Life-span bound for ``a`` and a Picard run on ``[0, min(T_bound, T_cap)]``."""
    tn = triple_norm(a, mu, t_grid)
    Tb = lifespan_bound(tn, mu, c_star, form)
    T_run = min(Tb, T_cap)
    if not run:
        return LifespanResult(tn, Tb, T_run, False, 0)
    ok, trace = picard_converges(a, T_run, mu=mu, **solver_kwargs)
    return LifespanResult(tn, Tb, T_run, ok, trace.sweeps)


def empirical_existence_time(a: PhysicalField, T_grid, **solver_kwargs) -> float:
    """Largest ``T`` in ``T_grid`` (scanned downwards) on which Picard converges; 0 if none."""
    for T in sorted(np.asarray(T_grid, dtype=float), reverse=True):
        if picard_converges(a, float(T), **solver_kwargs)[0]:
            return float(T)
    return 0.0


def rough_split_threshold(a1: PhysicalField, a2_unit: PhysicalField, T: float, lo: float, hi: float,
                          n_bisect: int = 8, **solver_kwargs) -> tuple[float, list]:
    """Bisection on ``s`` for convergence of Picard from ``a1 + s * a2_unit``.

    ``a2_unit`` should have ``||a2_unit||_{inf,1} = 1``, so ``s`` is the
    rough amplitude. Requires convergence at ``lo`` and failure at ``hi``.

    Returns
    -------
    (float, list)
        The largest amplitude found to converge, and ``(amplitude, converged)``
        pairs in evaluation order.
    """
    history = []

    def ok(s):
        res = picard_converges(a1 + a2_unit * s, T, **solver_kwargs)[0]
        history.append((float(s), bool(res)))
        return res

    if not ok(lo):
        raise ValueError(f"Picard does not converge at the lower amplitude {lo}")
    if ok(hi):
        raise ValueError(f"Picard converges at the upper amplitude {hi}")
    for _ in range(n_bisect):
        mid = math.sqrt(lo * hi) if lo > 0 else 0.5 * hi
        if ok(mid):
            lo = mid
        else:
            hi = mid
    return lo, history


# ---------------------------------------------------------------------------
# Checkpoints
# ---------------------------------------------------------------------------

CHECKPOINT_MAGIC = b"PEQF"
CHECKPOINT_VERSION = 1
_HEADER = struct.Struct("<4sI3I4dId")


def write_checkpoint(path, f: PhysicalField, time: float) -> None:
    """Write a checkpoint: little-endian header, then float64 values per component."""
    d = f.domain
    head = _HEADER.pack(CHECKPOINT_MAGIC, CHECKPOINT_VERSION, d.Nx, d.Ny, d.Nz,
                        d.Lx, d.Ly, d.z0, d.z1, f.ncomp, float(time))
    with open(Path(path), "wb") as fh:
        fh.write(head)
        fh.write(np.ascontiguousarray(f.data, dtype="<f8").tobytes())


def read_checkpoint(path, bc: BC | str = BC.NEUMANN) -> tuple[PhysicalField, float]:
    """Read a checkpoint written by :func:`write_checkpoint`."""
    raw = Path(path).read_bytes()
    if len(raw) < _HEADER.size:
        raise ValueError("truncated checkpoint header")
    magic, version, nx, ny, nz, lx, ly, z0, z1, ncomp, time = _HEADER.unpack_from(raw)
    if magic != CHECKPOINT_MAGIC:
        raise ValueError("not a checkpoint file (bad magic)")
    if version != CHECKPOINT_VERSION:
        raise ValueError(f"unsupported checkpoint version {version}")
    n = ncomp * nx * ny * nz
    body = raw[_HEADER.size:]
    if len(body) != 8 * n:
        raise ValueError("checkpoint body has the wrong size")
    d = Domain(Lx=lx, Ly=ly, z0=z0, z1=z1, Nx=nx, Ny=ny, Nz=nz, bc=BC.parse(bc))
    data = np.frombuffer(body, dtype="<f8").reshape((ncomp, nx, ny, nz)).astype(float)
    return PhysicalField(data, d), float(time)
