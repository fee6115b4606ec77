"""Numerical checks of the smoothing and interpolation estimates.

Every check returns an :class:`EstimateReport`. Decay estimates
``||T(t) f|| <= C t^p ||f||`` are checked by sweeping ``t``, taking the
maximum of the norm ratio over several data samples at each ``t``, and
fitting ``p`` by least squares in log-log coordinates. Inequalities with
explicit constants are checked one-sided: only violations count.

Estimate identifiers
--------------------
``rl_caputo_interpolation``
    ``||d^a f||_1 <= 2/Gamma(1-a) ||f||_1^{1-a} ||f'||_1^a`` for ``f(z0) = 0``.
``frac_gradient_interpolation``
    ``||grad_H (-Lap_H)^{-a/2} f||_{inf,1} <= C ||f||^a ||grad_H f||^{1-a}``.
``vertical_rl_smoothing``
    ``||exp(t Lap_*) d_z I^a f||_1 ~ t^{-(1-a)/2}`` on admissible data.
``frac_heat``, ``riesz_pair_frac_heat``, ``riesz_pair_derivative_heat``
    Horizontal heat composed with ``(-Lap_H)^{a/2}``, ``R_i R_j (-Lap_H)^{a/2}``
    and ``R_i R_j d_k``; rates ``-a/2``, ``-a/2``, ``-1/2``.
``grad_semigroup``, ``dz_rl_semigroup``, ``projected_fraclap_semigroup``, ``div_semigroup``
    ``L^inf(L^1)`` rates of ``grad S``, ``S d_z I^a``, ``S P (-Lap_H)^{a/2}``
    and ``S P div_H``.
``periodic_heat_derivative``, ``vertical_heat_derivative``
    Derivative of the periodic heat semigroup in ``L^inf`` and of the
    Neumann heat semigroup in ``L^inf(J)``.
``lq_semigroup``
    ``L^inf(L^inf)`` versions of the gradient, divergence, ``d_z I^a`` and
    projected fractional rates.
``bilinear``
    ``||S(t) P div(u~ (x) v)||_{inf,1}`` against its bilinear bound.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import asdict, dataclass, field as dc_field
from typing import Callable

import numpy as np
from scipy.special import gamma

from .datagen import random_signs, random_smooth, random_solenoidal, spike, square_wave, step
from .domain import Domain
from .field import PhysicalField, column_norms, norm_inf_p
from .hops import (
    frac_laplacian_h,
    heat_horizontal,
    helmholtz_project,
    horizontal_derivative,
    riesz,
)
from .semigroup import StokesSemigroup, loglog_fit
from .solver import bilinear
from .vcalc import (
    VerticalProfile,
    caputo,
    derivative_of_heat,
    make_admissible,
    smoothing_rl,
)

R2_MIN = 0.98
EXPONENT_TOL = 0.05

SUITE_IDS = (
    "rl_caputo_interpolation",
    "frac_gradient_interpolation",
    "vertical_rl_smoothing",
    "frac_heat",
    "riesz_pair_frac_heat",
    "riesz_pair_derivative_heat",
    "grad_semigroup",
    "dz_rl_semigroup",
    "projected_fraclap_semigroup",
    "div_semigroup",
    "periodic_heat_derivative",
    "vertical_heat_derivative",
    "lq_semigroup",
    "bilinear",
)
EXTRA_IDS = ("kernel_bounds", "l1_lq_smoothing")


def _clean(x):
    """JSON-safe float: NaN and infinities become None."""
    if x is None:
        return None
    if isinstance(x, (float, np.floating)):
        x = float(x)
        return x if math.isfinite(x) else None
    return x


# ---------------------------------------------------------------------------
# Reports
# ---------------------------------------------------------------------------


@dataclass
class EstimateReport:
    """Outcome of one check.

    ``verdict`` is ``"pass"``, ``"fail"``, ``"inconclusive"`` (a decay fit
    with ``R^2 < 0.98``) or ``"error"`` (the check raised). ``parts`` holds
    sub-results for estimates with several assertions; the top-level
    numbers then come from the part with the largest deviation.
    """

    estimate_id: str
    predicted_exponent: float | None = None
    fitted_exponent: float | None = None
    fitted_constant: float | None = None
    n_samples: int = 0
    max_violation: float = 0.0
    r2: float | None = None
    verdict: str = "fail"
    t_range: tuple | None = None
    seed: int | None = None
    tolerance: float = EXPONENT_TOL
    h: float | None = None
    skipped: int = 0
    details: dict = dc_field(default_factory=dict)
    parts: list = dc_field(default_factory=list)

    @property
    def passed(self) -> bool:
        return self.verdict == "pass"

    def to_dict(self) -> dict:
        return _sanitize(asdict(self))

    def to_json(self) -> str:
        return json.dumps(_sanitize(asdict(self)), sort_keys=True, default=_json_default, allow_nan=False)

    def csv_row(self) -> list:
        return [self.estimate_id, _fmt(self.predicted_exponent), _fmt(self.fitted_exponent),
                _fmt(self.fitted_constant), _fmt(self.max_violation), _fmt(self.r2), self.verdict]


CSV_COLUMNS = ["estimate_id", "predicted_exponent", "fitted_exponent", "fitted_constant",
               "max_violation", "r2", "verdict"]


def _fmt(x) -> str:
    if x is None:
        return ""
    x = float(x)
    if not math.isfinite(x):
        return "nan"
    return repr(x)


def _json_default(o):
    if isinstance(o, np.ndarray):
        return [_clean(v) for v in o.tolist()]
    if isinstance(o, (np.floating, np.integer, np.bool_)):
        return o.item()
    raise TypeError(f"cannot serialize {type(o)}")


def _sanitize(o):
    if isinstance(o, dict):
        return {str(k): _sanitize(v) for k, v in o.items()}
    if isinstance(o, (list, tuple)):
        return [_sanitize(v) for v in o]
    if isinstance(o, np.ndarray):
        return [_sanitize(v) for v in o.tolist()]
    if isinstance(o, (float, np.floating)):
        return _clean(o)
    if isinstance(o, (np.integer,)):
        return int(o)
    if isinstance(o, np.bool_):
        return bool(o)
    return o


def reports_to_jsonl(reports) -> str:
    return "".join(r.to_json() + "\n" for r in reports)


def reports_to_csv(reports) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for r in reports:
        w.writerow(r.csv_row())
    return buf.getvalue()


def _fit_verdict(fitted: float, predicted: float, r2: float, tol: float, r2_min: float = R2_MIN) -> str:
    if not (math.isfinite(fitted) and math.isfinite(r2)):
        return "fail"
    if r2 < r2_min:
        return "inconclusive"
    return "pass" if abs(fitted - predicted) <= tol else "fail"


def _combine(report: EstimateReport, parts: list[EstimateReport]) -> EstimateReport:
    """Fill the top level from the worst part; verdict is the worst verdict."""
    order = {"error": 3, "fail": 2, "inconclusive": 1, "pass": 0}
    report.parts = [p.to_dict() for p in parts]
    worst = max(parts, key=lambda p: (order[p.verdict],
                                      abs((p.fitted_exponent or 0.0) - (p.predicted_exponent or 0.0))))
    for name in ("predicted_exponent", "fitted_exponent", "fitted_constant", "r2", "t_range", "h"):
        setattr(report, name, getattr(worst, name))
    report.n_samples = sum(p.n_samples for p in parts)
    report.skipped = sum(p.skipped for p in parts)
    report.max_violation = max(p.max_violation for p in parts)
    report.verdict = max((p.verdict for p in parts), key=order.get)
    return report


def derive_seed(master: int, counter: int) -> int:
    """Per-check seed derived from the master seed by a counter."""
    ss = np.random.SeedSequence(entropy=int(master), spawn_key=(int(counter),))
    return int(ss.generate_state(1, dtype=np.uint64)[0])


# ---------------------------------------------------------------------------
# Fit geometries and data families
# ---------------------------------------------------------------------------

GEOMETRIES = {
    # quasi one-dimensional horizontal box: data vary along x only
    "line": dict(Lx=2 * np.pi, Ly=2 * np.pi, Nx=2048, Ny=4, Nz=4),
    # full horizontal plane for the Riesz pairs
    "plane": dict(Lx=2 * np.pi, Ly=2 * np.pi, Nx=1024, Ny=1024, Nz=4),
    # tall column for vertical L^1 rates: J = (0, 4) keeps sqrt(t) << h
    "column": dict(Lx=2 * np.pi, Ly=2 * np.pi, Nx=4, Ny=4, z0=0.0, z1=4.0, Nz=1025),
    # unit column for vertical L^inf rates
    "column_unit": dict(Lx=2 * np.pi, Ly=2 * np.pi, Nx=4, Ny=4, z0=0.0, z1=1.0, Nz=513),
}


def geometry_domain(name: str, overrides: dict | None = None) -> Domain:
    params = dict(GEOMETRIES[name])
    params.update(overrides or {})
    return Domain(**params)


def _horizontal_profile(domain: Domain, family: str, rng: np.random.Generator) -> np.ndarray:
    """Horizontal pattern of shape ``(Nx, Ny)``.

    On a box with ``Ny`` much smaller than ``Nx`` the pattern varies in
    ``x``; on a square box it varies along the diagonal ``x + y``, so that
    mixed Riesz pairs act on it nontrivially.
    """
    nx, ny = domain.Nx, domain.Ny
    diagonal = nx == ny and nx > 16
    if diagonal and domain.Lx != domain.Ly:
        raise ValueError("diagonal patterns need a square box")
    if family == "square_wave":
        duty = rng.uniform(0.3, 0.7)
        line = square_wave(nx, duty, int(rng.integers(nx)))
    elif family == "random_sign":
        line = random_signs(nx, rng)
    else:
        raise ValueError(f"unknown horizontal data family {family!r}")
    if diagonal:
        i = np.arange(nx)
        return line[(i[:, None] + i[None, :]) % nx]
    return np.broadcast_to(line[:, None], (nx, ny)).copy()


def _vertical_profile(domain: Domain, family: str, rng: np.random.Generator) -> np.ndarray:
    n = domain.Nz
    if family == "spike":
        return spike(n, int(rng.integers(n // 4, 3 * n // 4)), domain.dz)
    if family == "step":
        return step(n, int(rng.integers(int(0.3 * n), int(0.7 * n))))
    if family == "random_sign":
        return random_signs(n, rng)
    raise ValueError(f"unknown vertical data family {family!r}")


def make_data(domain: Domain, family: str, layout: str, rng: np.random.Generator) -> PhysicalField:
    """Test data on ``domain``.

    ``layout`` is ``"scalar"``, ``"vector"`` (the pattern in the second
    component only, which the projection leaves unchanged), ``"tensor"``
    (the pattern in entry ``F_21``) or ``"column"`` (a scalar depending on
    ``z`` only). ``family="smooth"`` gives band-limited smooth data for any
    layout.
    """
    ncomp = {"scalar": 1, "vector": 2, "tensor": 4, "column": 1}[layout]
    if family == "smooth":
        data = random_smooth(domain, rng, ncomp, bandlimit=3, nz_modes=3)
        if layout == "vector":
            data = helmholtz_project(PhysicalField(data, domain)).data
        return PhysicalField(data, domain)
    data = np.zeros((ncomp,) + domain.shape)
    if layout == "column":
        data[0] = _vertical_profile(domain, family, rng)[None, None, :]
        return PhysicalField(data, domain)
    pattern = _horizontal_profile(domain, family, rng)[..., None]
    slot = {"scalar": 0, "vector": 1, "tensor": 2}[layout]
    data[slot] = pattern
    return PhysicalField(data, domain)


# ---------------------------------------------------------------------------
# Decay-rate operators
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class DecayOp:
    """A composite ``T(t)`` with its predicted rate and fit setup."""

    name: str
    predicted: Callable[[float], float]
    apply: Callable[[PhysicalField, float, float], np.ndarray]
    geometry: str
    layout: str
    default_data: str
    p_out: float = 1.0
    p_in: float = 1.0
    admissible: bool = False


def _sg(domain: Domain) -> StokesSemigroup:
    return StokesSemigroup(domain)


def _rl_column(f: PhysicalField, a: float, t: float) -> np.ndarray:
    d = f.domain
    prof = VerticalProfile(f.data, d.z0, d.z1)
    return smoothing_rl(prof, a, t, d.bc).values


def _frac_heat(f, a, t):
    return heat_horizontal(frac_laplacian_h(f, a), t).data


def _riesz_frac_heat(f, a, t):
    return heat_horizontal(riesz(frac_laplacian_h(f, a), 1, 2), t).data


def _riesz_deriv_heat(f, a, t):
    return heat_horizontal(riesz(horizontal_derivative(f, 1), 1, 2), t).data


def _grad(f, a, t):
    return _sg(f.domain).apply_grad(f, t).data


def _dz_rl(f, a, t):
    return _sg(f.domain).apply_dz_rl(f, a, t).data


def _proj_frac(f, a, t):
    return _sg(f.domain).apply_projected_fraclap(f, a, t).data


def _div(f, a, t):
    return _sg(f.domain).apply_div_h(f, t).data


def _periodic_deriv(f, a, t):
    return horizontal_derivative(heat_horizontal(f, t), 1).data


def _vertical_deriv(f, a, t):
    d = f.domain
    return derivative_of_heat(f.data, d.h, t, d.bc)


def _identity_semigroup(f, a, t):
    return _sg(f.domain).apply(f, t).data


def _rl_rate(a: float) -> float:
    return -(1.0 - a) / 2.0


DECAY_OPS: dict[str, DecayOp] = {
    "vertical_rl_smoothing": DecayOp("vertical_rl_smoothing", _rl_rate, _rl_column,
                                     "column", "column", "spike", 1.0, 1.0, True),
    "frac_heat": DecayOp("frac_heat", lambda a: -a / 2, _frac_heat,
                         "line", "scalar", "square_wave", np.inf, np.inf),
    "riesz_pair_frac_heat": DecayOp("riesz_pair_frac_heat", lambda a: -a / 2, _riesz_frac_heat,
                                    "plane", "scalar", "square_wave", np.inf, np.inf),
    "riesz_pair_derivative_heat": DecayOp("riesz_pair_derivative_heat", lambda a: -0.5, _riesz_deriv_heat,
                                          "plane", "scalar", "square_wave", np.inf, np.inf),
    "grad_semigroup": DecayOp("grad_semigroup", lambda a: -0.5, _grad,
                              "line", "vector", "square_wave"),
    "dz_rl_semigroup": DecayOp("dz_rl_semigroup", _rl_rate, _dz_rl,
                               "column", "column", "spike", 1.0, 1.0, True),
    "projected_fraclap_semigroup": DecayOp("projected_fraclap_semigroup", lambda a: -a / 2, _proj_frac,
                                           "line", "vector", "square_wave"),
    "div_semigroup": DecayOp("div_semigroup", lambda a: -0.5, _div,
                             "line", "tensor", "square_wave"),
    "periodic_heat_derivative": DecayOp("periodic_heat_derivative", lambda a: -0.5, _periodic_deriv,
                                        "line", "scalar", "square_wave", np.inf, np.inf),
    "vertical_heat_derivative": DecayOp("vertical_heat_derivative", lambda a: -0.5, _vertical_deriv,
                                        "column_unit", "column", "step", np.inf, np.inf),
    "grad_semigroup_inf": DecayOp("grad_semigroup_inf", lambda a: -0.5, _grad,
                                  "line", "vector", "square_wave", np.inf, np.inf),
    "div_semigroup_inf": DecayOp("div_semigroup_inf", lambda a: -0.5, _div,
                                 "line", "tensor", "square_wave", np.inf, np.inf),
    "dz_rl_semigroup_inf": DecayOp("dz_rl_semigroup_inf", _rl_rate, _dz_rl,
                                   "column_unit", "column", "step", np.inf, np.inf, True),
    "projected_fraclap_semigroup_inf": DecayOp("projected_fraclap_semigroup_inf", lambda a: -a / 2,
                                               _proj_frac, "line", "vector", "square_wave", np.inf, np.inf),
    "l1_lq_smoothing": DecayOp("l1_lq_smoothing", lambda a: -1.0, _identity_semigroup,
                               "column_unit", "column", "spike", np.inf, 1.0),
}

DEFAULT_ALPHAS = {
    "vertical_rl_smoothing": (0.5,),
    "frac_heat": (0.25, 0.5),
    "riesz_pair_frac_heat": (0.25, 0.5),
    "dz_rl_semigroup": (0.5,),
    "projected_fraclap_semigroup": (0.5,),
    "dz_rl_semigroup_inf": (0.5,),
    "projected_fraclap_semigroup_inf": (0.5,),
}

LQ_PARTS = ("grad_semigroup_inf", "div_semigroup_inf", "dz_rl_semigroup_inf",
            "projected_fraclap_semigroup_inf")


def _norm(values: np.ndarray, domain: Domain, p: float) -> float:
    return norm_inf_p(PhysicalField(values, domain), p, oversample=1)


def fit_decay(op_id: str, alpha: float = 0.5, data_gen: str | None = None,
              t_range: tuple = (1e-4, 1e-2), n_t: int = 9, n_samples: int = 3, seed: int = 0,
              predicted: float | None = None, tol: float = EXPONENT_TOL,
              geometry: dict | None = None, r2_min: float = R2_MIN) -> EstimateReport:
    """Fit the decay exponent of a registered composite operator.

    At each of ``n_t`` log-spaced times the ratio
    ``||T(t) f||_{inf,p_out} / ||f||_{inf,p_in}`` is maximized over
    ``n_samples`` data samples; then ``log ratio`` is regressed on ``log t``.

    Parameters
    ----------
    op_id : str
        Key of :data:`DECAY_OPS`.
    alpha : float
        Order of the fractional operator, where one is involved.
    data_gen : str, optional
        Data family (``square_wave``, ``random_sign``, ``smooth``, ``spike``,
        ``step``); defaults to the operator's registered family.
    predicted : float, optional
        Overrides the predicted exponent (used to test the harness itself).
    geometry : dict, optional
        Overrides of the fit domain parameters.
    """
    op = DECAY_OPS[op_id]
    if not (0 < t_range[0] < t_range[1] <= 1):
        raise ValueError("t_range must satisfy 0 < t_min < t_max <= 1")
    family = data_gen or op.default_data
    domain = geometry_domain(op.geometry, geometry)
    ts = np.logspace(np.log10(t_range[0]), np.log10(t_range[1]), n_t)
    rng = np.random.default_rng(seed)
    ratios = []
    skipped = 0
    for _ in range(n_samples):
        f = make_data(domain, family, op.layout, rng)
        if op.admissible and alpha > 0:
            prof = make_admissible(VerticalProfile(f.data, domain.z0, domain.z1), alpha)
            f = f.with_data(prof.values)
        base = _norm(f.data, domain, op.p_in)
        if not base > 0:
            skipped += 1
            continue
        ratios.append([_norm(op.apply(f, alpha, t), domain, op.p_out) / base for t in ts])
    pred = op.predicted(alpha) if predicted is None else float(predicted)
    rep = EstimateReport(op_id, predicted_exponent=pred, n_samples=len(ratios), seed=seed,
                         t_range=(float(ts[0]), float(ts[-1])), tolerance=tol, h=domain.h,
                         skipped=skipped)
    rep.details = {"alpha": alpha, "data": family, "geometry": op.geometry, "p_out": op.p_out,
                   "p_in": op.p_in}
    if not ratios:
        rep.verdict = "fail"
        return rep
    agg = np.max(np.array(ratios), axis=0)
    p, c, r2 = loglog_fit(ts, agg)
    rep.fitted_exponent, rep.fitted_constant, rep.r2 = p, c, r2
    rep.details["t"] = ts
    rep.details["ratio"] = agg
    rep.verdict = _fit_verdict(p, pred, r2, tol, r2_min)
    return rep


def fit_decay_multi(op_id: str, alphas=None, report_id: str | None = None, **kwargs) -> EstimateReport:
    """:func:`fit_decay` for several orders, combined into one report."""
    alphas = DEFAULT_ALPHAS.get(op_id, (0.5,)) if alphas is None else alphas
    parts = [fit_decay(op_id, a, **kwargs) for a in alphas]
    rep = EstimateReport(report_id or op_id, seed=kwargs.get("seed"),
                         tolerance=kwargs.get("tol", EXPONENT_TOL))
    return _combine(rep, parts)


def fit_lq_semigroup(seed: int = 0, predicted: dict | None = None, **kwargs) -> EstimateReport:
    """``L^inf(L^q)`` rates with ``q = inf`` for four composites, combined."""
    predicted = predicted or {}
    parts = []
    for i, op_id in enumerate(LQ_PARTS):
        alphas = DEFAULT_ALPHAS.get(op_id, (0.5,))
        for a in alphas:
            parts.append(fit_decay(op_id, a, seed=derive_seed(seed, i), predicted=predicted.get(op_id),
                                   **kwargs))
    rep = EstimateReport("lq_semigroup", seed=seed, tolerance=kwargs.get("tol", EXPONENT_TOL))
    return _combine(rep, parts)


def smoothing_candidates(seed: int = 0, q: float = np.inf, **kwargs) -> EstimateReport:
    """``L^inf(L^1) -> L^inf(L^q)`` rate on concentrated data.

    The verdict tests the exponent ``-(1 - 1/q)``; the deviation from the
    alternative ``-(1 - 1/q)/2`` is listed in ``details``.
    """
    if not np.isinf(q):
        raise NotImplementedError("only q = inf is registered")
    inv_q = 0.0 if np.isinf(q) else 1.0 / q
    full, half = -(1.0 - inv_q), -(1.0 - inv_q) / 2.0
    rep = fit_decay("l1_lq_smoothing", 0.0, seed=seed, predicted=full, **kwargs)
    if rep.fitted_exponent is not None:
        rep.details["candidates"] = {"full": full, "half": half}
        rep.details["deviation"] = {"full": rep.fitted_exponent - full, "half": rep.fitted_exponent - half}
    return rep


# ---------------------------------------------------------------------------
# Interpolation inequalities
# ---------------------------------------------------------------------------


def _l1_piecewise_linear(values: np.ndarray, dz: float) -> float:
    """Exact ``L^1`` norm of the piecewise-linear interpolant."""
    a, b = values[:-1], values[1:]
    same = a * b >= 0
    with np.errstate(divide="ignore", invalid="ignore"):
        cross = (a * a + b * b) / (2.0 * (np.abs(a) + np.abs(b)))
    cell = np.where(same, 0.5 * np.abs(a + b), np.where(np.abs(a) + np.abs(b) > 0, cross, 0.0))
    return float(cell.sum() * dz)


def _simpson(values: np.ndarray, dz: float) -> float:
    n = values.shape[-1]
    if (n - 1) % 2:
        raise ValueError("Simpson rule needs an even number of cells")
    w = np.full(n, 2.0)
    w[1::2] = 4.0
    w[0] = w[-1] = 1.0
    return float(values @ w * dz / 3.0)


def random_admissible_profile(rng: np.random.Generator, n: int = 4097) -> VerticalProfile:
    """Random piecewise-linear profile on ``(0, 1)`` with ``f(0) = 0``.

    Knots lie on grid points, so the Caputo derivative computed on the grid
    is exact for the profile.
    """
    n_knots = int(rng.integers(2, 13))
    inner = np.sort(rng.choice(np.arange(1, n - 1), size=n_knots - 1, replace=False))
    knots = np.concatenate([[0], inner, [n - 1]])
    vals = np.concatenate([[0.0], rng.standard_normal(n_knots)])
    vals *= rng.uniform(0.1, 10.0)
    return VerticalProfile(np.interp(np.arange(n), knots, vals))


def rl_caputo_sides(f: VerticalProfile, alpha: float) -> tuple[float, float]:
    """Both sides of ``||d^a f||_1 <= 2/Gamma(1-a) ||f||_1^{1-a} ||f'||_1^a``."""
    lhs = _simpson(np.abs(caputo(f, alpha).values), f.dz)
    f1 = _l1_piecewise_linear(f.values, f.dz)
    d1 = float(np.abs(np.diff(f.values)).sum())
    rhs = 2.0 / gamma(1.0 - alpha) * f1 ** (1.0 - alpha) * d1**alpha
    return lhs, rhs


def proof_constant(alpha: float) -> float:
    """Constant ``2/Gamma(1-a) + 2/Gamma(2-a)`` reached by optimizing the split point ``mu``."""
    return 2.0 / gamma(1.0 - alpha) + 2.0 / gamma(2.0 - alpha)


def check_rl_caputo(alphas=(0.25, 0.5, 0.75), n_trials: int = 500, seed: int = 0,
                    tol: float = 1e-6, n: int = 4097) -> EstimateReport:
    """Sweep the Caputo interpolation inequality with the constant ``2/Gamma(1-a)``.

    A violation is ``(lhs - rhs)/rhs > tol``; ``max_violation`` is the
    largest such relative excess. The same profiles are also checked against
    :func:`proof_constant`, reported in ``details``.
    """
    rng = np.random.default_rng(seed)
    profiles = [random_admissible_profile(rng, n) for _ in range(n_trials)]
    worst = 0.0
    per_alpha = {}
    total = 0
    for a in alphas:
        ratios = []
        for f in profiles:
            lhs, rhs = rl_caputo_sides(f, a)
            ratios.append(lhs / rhs)
        ratios = np.array(ratios)
        count = int(np.sum(ratios - 1.0 > tol))
        total += count
        worst = max(worst, float(ratios.max() - 1.0))
        alt = gamma(1.0 - a) / 2.0 * proof_constant(a)
        per_alpha[str(a)] = {"max_ratio": float(ratios.max()), "violations": count,
                             "proof_constant_violations": int(np.sum(ratios / alt - 1.0 > tol))}
    rep = EstimateReport("rl_caputo_interpolation", n_samples=n_trials * len(alphas), seed=seed,
                         max_violation=max(worst, 0.0), tolerance=tol, h=1.0)
    rep.fitted_constant = max(v["max_ratio"] for v in per_alpha.values())
    rep.details = {"violations": total, "by_alpha": per_alpha, "alphas": list(alphas)}
    rep.verdict = "pass" if total == 0 else "fail"
    return rep


def local_rl_caputo_sides(f: VerticalProfile, alpha: float, m: int) -> tuple[float, float]:
    """Both sides of the local bound on ``(z0, z0 + mu)`` with ``mu = m dz``."""
    d = np.abs(caputo(f, alpha).values[: m + 1])
    lhs = _simpson(d, f.dz) if m % 2 == 0 else float(np.trapezoid(d, dx=f.dz))
    mu = m * f.dz
    rhs = mu ** (1.0 - alpha) / gamma(2.0 - alpha) * float(np.abs(np.diff(f.values[: m + 1])).sum())
    return lhs, rhs


def random_mean_free_field(domain: Domain, rng: np.random.Generator) -> PhysicalField:
    """Smooth scalar field with random spectral width and zero horizontal mean."""
    data = random_smooth(domain, rng, 1, bandlimit=int(rng.integers(1, 8)),
                         nz_modes=int(rng.integers(1, 5)), decay=rng.uniform(0.0, 2.0))
    data = data - data.mean(axis=(1, 2), keepdims=True)
    return PhysicalField(data, domain)


def frac_gradient_ratio(f: PhysicalField, alpha: float) -> float:
    """``||grad_H (-Lap_H)^{-a/2} f|| / (||f||^a ||grad_H f||^{1-a})`` in ``L^inf(L^1)``."""
    g = frac_laplacian_h(f, -alpha)
    num = norm_inf_p(PhysicalField(np.concatenate([horizontal_derivative(g, 1).data,
                                                   horizontal_derivative(g, 2).data]), f.domain), 1.0)
    gf = PhysicalField(np.concatenate([horizontal_derivative(f, 1).data,
                                       horizontal_derivative(f, 2).data]), f.domain)
    den = norm_inf_p(f, 1.0) ** alpha * norm_inf_p(gf, 1.0) ** (1.0 - alpha)
    return num / den if den > 0 else math.nan


def check_frac_gradient(alpha: float = 0.5, n_trials: int = 200, seed: int = 0,
                        domain: Domain | None = None, stability: float = 2.0) -> EstimateReport:
    """Maximal ratio over two independent batches of ``n_trials`` fields.

    Passes when both maxima are finite and differ by less than the factor
    ``stability``.
    """
    domain = domain or Domain(Nx=32, Ny=32, Nz=9)
    maxima = []
    minima = []
    for b in range(2):
        rng = np.random.default_rng(derive_seed(seed, b))
        r = np.array([frac_gradient_ratio(random_mean_free_field(domain, rng), alpha)
                      for _ in range(n_trials)])
        r = r[np.isfinite(r)]
        maxima.append(float(r.max()) if r.size else math.nan)
        minima.append(float(r.min()) if r.size else math.nan)
    spread = max(maxima) / min(maxima) if min(maxima) > 0 else math.inf
    rep = EstimateReport("frac_gradient_interpolation", fitted_constant=max(maxima),
                         n_samples=2 * n_trials, seed=seed, tolerance=stability, h=domain.h)
    rep.details = {"alpha": alpha, "batch_max": maxima, "batch_min": minima, "spread": spread}
    rep.verdict = "pass" if (all(math.isfinite(m) for m in maxima) and spread < stability) else "fail"
    return rep


# ---------------------------------------------------------------------------
# Kernel bounds
# ---------------------------------------------------------------------------

C0 = math.exp(-0.5)


def _unit_profile(n: int, u: np.ndarray) -> np.ndarray:
    """``|d^n/du^n exp(-u^2/4)| exp(u^2/8)`` scaled to ``t = 1``: the 1-D factor of the kernel ratio."""
    if n == 0:
        poly = np.ones_like(u)
    elif n == 1:
        poly = u / 2.0
    elif n == 2:
        poly = u * u / 4.0 - 0.5
    elif n == 3:
        poly = u**3 / 8.0 - 0.75 * u
    else:
        raise ValueError("derivative order up to 3")
    return np.abs(poly) * np.exp(-u * u / 8.0)


def kernel_constant(orders: tuple[int, ...]) -> float:
    """``sup_x t^{|n|/2} |d^n G_t| / G_{2t}`` for the ``d``-dimensional Gauss kernel.

    The ratio factorizes over coordinates; each factor is maximized on a
    fine grid refined around its maximum. The first-order 2-D value is
    ``2 C0`` with ``C0 = sup z e^{-z^2/2} = e^{-1/2}``.
    """
    dim = len(orders)
    c = 2.0 ** (dim / 2.0)
    for n in orders:
        if n == 0:
            continue
        if n == 1:
            c *= C0
            continue
        u = np.linspace(0.0, 12.0, 200_001)
        f = _unit_profile(n, u)
        k = int(np.argmax(f))
        uu = np.linspace(u[max(k - 1, 0)], u[min(k + 1, len(u) - 1)], 20_001)
        c *= float(_unit_profile(n, uu).max())
    return c


def gauss_kernel(x: np.ndarray, y: np.ndarray, t: float) -> np.ndarray:
    return np.exp(-(x * x + y * y) / (4.0 * t)) / (4.0 * np.pi * t)


def gauss_derivative(x: np.ndarray, y: np.ndarray, t: float, nx: int, ny: int) -> np.ndarray:
    """Mixed derivative ``d_x^nx d_y^ny G_t`` in closed form (orders up to 3)."""
    def factor(n, s):
        if n == 0:
            return np.ones_like(s)
        if n == 1:
            return -s / (2 * t)
        if n == 2:
            return s * s / (4 * t * t) - 1 / (2 * t)
        if n == 3:
            return -(s**3) / (8 * t**3) + 3 * s / (4 * t * t)
        raise ValueError("derivative order up to 3")
    return factor(nx, x) * factor(ny, y) * gauss_kernel(x, y, t)


def check_kernel_bounds(t_grid=None, x_grid=None, rtol: float = 1e-12) -> EstimateReport:
    """Pointwise ``|d^n G_t| <= C t^{-|n|/2} G_{2t}`` for first and third derivatives."""
    t_grid = np.logspace(-4, 1, 11) if t_grid is None else np.asarray(t_grid, dtype=float)
    x_grid = np.linspace(-10.0, 10.0, 201) if x_grid is None else np.asarray(x_grid, dtype=float)
    X, Y = np.meshgrid(x_grid, x_grid, indexing="ij")
    worst = 0.0
    observed = {}
    constants = {}
    violations = 0
    for nx, ny in ((1, 0), (0, 1), (3, 0), (2, 1), (1, 2), (0, 3)):
        C = kernel_constant((nx, ny))
        constants[f"{nx}{ny}"] = C
        obs = 0.0
        for t in t_grid:
            s = np.sqrt(t)
            Xs, Ys = X * s, Y * s
            lhs = np.abs(gauss_derivative(Xs, Ys, t, nx, ny))
            bound = C * t ** (-(nx + ny) / 2.0) * gauss_kernel(Xs, Ys, 2 * t)
            ok = bound > 0
            ratio = np.where(ok, lhs / np.where(ok, bound, 1.0), 0.0)
            obs = max(obs, float((ratio * C).max()))
            excess = float(ratio.max() - 1.0)
            worst = max(worst, excess)
            violations += int(np.sum(ratio > 1.0 + rtol))
        observed[f"{nx}{ny}"] = obs
    rep = EstimateReport("kernel_bounds", fitted_constant=observed["10"],
                         n_samples=len(t_grid) * X.size * 6, max_violation=max(worst, 0.0),
                         tolerance=rtol)
    rep.details = {"C0": C0, "analytic_constants": constants, "observed_sup": observed,
                   "violations": violations,
                   "one_dimensional_first_order": math.sqrt(2.0) * C0}
    rep.verdict = "pass" if violations == 0 else "fail"
    return rep


# ---------------------------------------------------------------------------
# Bilinear estimate
# ---------------------------------------------------------------------------


def bilinear_ratio(vt: PhysicalField, v: PhysicalField, ts, alpha: float = 0.5,
                   oversample: int = 1) -> np.ndarray:
    """``||S(t) P div(u~ (x) v)||_{inf,1}`` divided by its bilinear bound, for each ``t``.

    The bound is ``t^{-(1-a)/2} (||v~||_1 ||v|| + ||v||_1 ||v~||)^{1-a} (||v~||_1 ||v||_1)^a``
    with ``||.|| = ||.||_{inf,1}`` and ``||.||_1 = ||.||_{1,inf,1}``.
    """
    d = v.domain
    sg = StokesSemigroup(d)
    from .field import norm_sobolev

    n_v, n_vt = norm_inf_p(v, 1.0, oversample), norm_inf_p(vt, 1.0, oversample)
    s_v, s_vt = norm_sobolev(v, oversample=oversample), norm_sobolev(vt, oversample=oversample)
    b = helmholtz_project(bilinear(vt, v))
    mix = (s_vt * n_v + s_v * n_vt) ** (1.0 - alpha) * (s_vt * s_v) ** alpha
    out = []
    for t in ts:
        num = norm_inf_p(sg.apply(b, t), 1.0, oversample)
        out.append(num / (t ** (-(1.0 - alpha) / 2.0) * mix))
    return np.array(out)


def check_bilinear(n_pairs: int = 100, seed: int = 0, ts=None, domain: Domain | None = None,
                   stability: float = 2.0, mean_free: bool = False) -> EstimateReport:
    """Largest bilinear ratio over random solenoidal pairs, split into two batches.

    Passes when the batch maxima are finite and within the factor
    ``stability``. The mean-free variant (both vertical averages zero) is
    reported in ``details``.
    """
    domain = domain or Domain(Nx=16, Ny=16, Nz=17)
    ts = np.logspace(-3, -1, 5) if ts is None else np.asarray(ts, dtype=float)

    def batch(counter, mf, n):
        rng = np.random.default_rng(derive_seed(seed, counter))
        best = 0.0
        for _ in range(n):
            pair = []
            for _ in range(2):
                pair.append(random_solenoidal(domain, rng, amplitude=rng.uniform(0.05, 1.0),
                                              bandlimit=int(rng.integers(1, 5)),
                                              nz_modes=int(rng.integers(1, 5)), mean_free=mf))
            best = max(best, float(np.max(bilinear_ratio(pair[0], pair[1], ts))))
        return best

    half = max(n_pairs // 2, 1)
    maxima = [batch(0, mean_free, half), batch(1, mean_free, half)]
    spread = max(maxima) / min(maxima) if min(maxima) > 0 else math.inf
    rep = EstimateReport("bilinear", fitted_constant=max(maxima), n_samples=2 * half, seed=seed,
                         tolerance=stability, h=domain.h, t_range=(float(ts[0]), float(ts[-1])))
    rep.details = {"batch_max": maxima, "spread": spread, "alpha": 0.5}
    if not mean_free:
        mf = [batch(2, True, max(half // 2, 1)), batch(3, True, max(half // 2, 1))]
        rep.details["mean_free_batch_max"] = mf
    rep.verdict = "pass" if (all(math.isfinite(m) for m in maxima) and spread < stability) else "fail"
    return rep


# ---------------------------------------------------------------------------
# Suite
# ---------------------------------------------------------------------------


@dataclass
class VerifySettings:
    """Settings of the estimate suite.

    ``inject`` maps estimate ids to wrong predicted exponents (harness
    self-test). ``geometry`` overrides fit-domain parameters per geometry
    name.
    """

    suite: tuple = SUITE_IDS
    seed: int = 0
    tolerance: float = EXPONENT_TOL
    r2_min: float = R2_MIN
    t_range: tuple = (1e-4, 1e-2)
    n_t: int = 9
    n_samples: int = 3
    interpolation_trials: int = 500
    frac_gradient_trials: int = 200
    bilinear_pairs: int = 100
    inject: dict = dc_field(default_factory=dict)
    geometry: dict = dc_field(default_factory=dict)


def _run_one(est_id: str, s: VerifySettings, seed: int) -> EstimateReport:
    fit_kw = dict(t_range=tuple(s.t_range), n_t=s.n_t, n_samples=s.n_samples, tol=s.tolerance,
                  r2_min=s.r2_min)
    inj = s.inject.get(est_id)
    if est_id == "rl_caputo_interpolation":
        return check_rl_caputo(n_trials=s.interpolation_trials, seed=seed)
    if est_id == "frac_gradient_interpolation":
        return check_frac_gradient(n_trials=s.frac_gradient_trials, seed=seed)
    if est_id == "bilinear":
        return check_bilinear(n_pairs=s.bilinear_pairs, seed=seed)
    if est_id == "kernel_bounds":
        return check_kernel_bounds()
    if est_id == "l1_lq_smoothing":
        return smoothing_candidates(seed=seed, **fit_kw)
    if est_id == "lq_semigroup":
        pred = inj if isinstance(inj, dict) else ({p: inj for p in LQ_PARTS} if inj is not None else None)
        return fit_lq_semigroup(seed=seed, predicted=pred, **fit_kw)
    if est_id in DECAY_OPS:
        op = DECAY_OPS[est_id]
        geo = s.geometry.get(op.geometry)
        return fit_decay_multi(est_id, seed=seed, predicted=inj, geometry=geo, **fit_kw)
    raise KeyError(f"unknown estimate id {est_id!r}")


def run_suite(settings: VerifySettings | None = None) -> list[EstimateReport]:
    """Run the selected checks in order; a failing check becomes an ``error`` report."""
    s = settings or VerifySettings()
    known = set(SUITE_IDS) | set(EXTRA_IDS)
    reports = []
    for counter, est_id in enumerate(s.suite):
        if est_id not in known:
            raise KeyError(f"unknown estimate id {est_id!r}")
        seed = derive_seed(s.seed, counter)
        try:
            rep = _run_one(est_id, s, seed)
        except Exception as exc:  # isolate failures, keep the suite going
            rep = EstimateReport(est_id, verdict="error", seed=seed)
            rep.details = {"error": f"{type(exc).__name__}: {exc}"}
        rep.seed = seed
        reports.append(rep)
    return reports
