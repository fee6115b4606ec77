"""Command-line interface.

Subcommands ``solve``, ``verify``, ``lifespan``, ``recursion`` and
``print-defaults``. Exit codes: 0 success, 1 bad configuration or input,
2 non-convergence, an unbounded recursion or a failed estimate, 3 blow-up.
Outputs other than ``metadata.json`` are byte-identical for the same
configuration and seed.
"""

from __future__ import annotations

import argparse
import contextlib
import csv
import datetime as _dt
import io
import json
import math
import sys
from pathlib import Path

import numpy as np
from scipy import fft as sfft

from . import __version__
from .config import ConfigError, RunConfig, config_from_dict, defaults_yaml, load_config
from .datagen import random_solenoidal, rough_split, taylor_green, taylor_green_decay_rate, z_profile
from .field import PhysicalField, norm_report
from .semigroup import StokesSemigroup
from .solver import (
    BlowUpError,
    NonConvergenceError,
    calibrate_c_star,
    empirical_existence_time,
    etd_solve,
    majorant_recursion,
    lifespan_bound,
    picard_solve,
    read_checkpoint,
    triple_norm,
    write_checkpoint,
)
from .verify import VerifySettings, reports_to_csv, reports_to_jsonl, run_suite

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_NONCONVERGENCE = 2
EXIT_BLOWUP = 3

TRACE_COLUMNS = ["m", "H_m", "K_m", "M_m", "L_m", "contraction"]
LIFESPAN_COLUMNS = ["lambda", "triple_norm", "T_bound", "T_empirical"]


def _num(x) -> str:
    """Shortest round-trip text of a number; ``nan``/``inf`` spelled out."""
    if isinstance(x, (int, np.integer)) and not isinstance(x, bool):
        return str(int(x))
    x = float(x)
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return repr(x)


def _jsonable(o):
    if isinstance(o, dict):
        return {str(k): _jsonable(v) for k, v in o.items()}
    if isinstance(o, (list, tuple)):
        return [_jsonable(v) for v in o]
    if isinstance(o, np.ndarray):
        return _jsonable(o.tolist())
    if isinstance(o, (np.integer,)):
        return int(o)
    if isinstance(o, (float, np.floating)):
        o = float(o)
        return o if math.isfinite(o) else None
    if isinstance(o, np.bool_):
        return bool(o)
    return o


def _dumps(obj) -> str:
    return json.dumps(_jsonable(obj), sort_keys=True, indent=2, allow_nan=False) + "\n"


def _write(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="\n") as fh:
        fh.write(text)


def _csv_text(columns, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for row in rows:
        w.writerow([_num(row[c]) for c in columns])
    return buf.getvalue()


def _write_metadata(out: Path, command: str) -> None:
    meta = {"command": command, "version": __version__,
            "created": _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds")}
    _write(out / "metadata.json", _dumps(meta))


# ---------------------------------------------------------------------------
# Initial data
# ---------------------------------------------------------------------------


def initial_data(cfg: RunConfig) -> PhysicalField:
    """Initial velocity selected by the ``data`` block."""
    data = cfg.data
    if data.generator == "checkpoint":
        try:
            f, _ = read_checkpoint(data.checkpoint, cfg.domain.bc)
        except (OSError, ValueError) as exc:
            raise ConfigError(f"cannot load checkpoint {data.checkpoint}: {exc}") from None
        return f
    d = cfg.domain.build()
    if data.generator == "taylor_green":
        return taylor_green(d, data.amplitude)
    if data.generator == "z_profile":
        return z_profile(d)
    if data.generator == "rough_split":
        a1, a2 = rough_split(d, data.a1_bandlimit, data.a2_amplitude, data.seed, data.a1_amplitude)
        return a1 + a2
    rng = np.random.default_rng(data.seed)
    return random_solenoidal(d, rng, data.amplitude, data.bandlimit)


def analytic_reference(cfg: RunConfig, a: PhysicalField, t: float) -> PhysicalField | None:
    """Exact solution at time ``t`` where one is known.

    Taylor--Green decays like a Stokes mode because its nonlinearity is a
    gradient; horizontally constant data have zero nonlinearity.
    """
    if cfg.data.generator == "taylor_green":
        return a * math.exp(-taylor_green_decay_rate(a.domain) * t)
    if cfg.data.generator == "z_profile":
        return StokesSemigroup(a.domain).apply(a, t)
    return None


def _rel_sup_error(u: PhysicalField, ref: PhysicalField) -> float:
    scale = float(np.abs(ref.data).max())
    err = float(np.abs(u.data - ref.data).max())
    return err / scale if scale > 0 else err


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------


def cmd_solve(cfg: RunConfig, out: Path) -> int:
    """Solve from the configured data; write trace, norms, checkpoints and a summary."""
    s = cfg.solver
    try:
        a = initial_data(cfg)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    summary = {"mode": s.mode, "T": s.T, "generator": cfg.data.generator}
    trace = None
    sol = None
    code = EXIT_OK
    try:
        if s.mode == "picard":
            try:
                sol, trace = picard_solve(a, s.T, M_sweeps=s.M_sweeps, dt=s.dt, n_steps=s.n_steps,
                                          n_quad=s.n_quad, mu=s.mu, atol=s.atol, rtol=s.rtol,
                                          dealias=s.dealias)
                if not trace.converged:
                    code = EXIT_NONCONVERGENCE
                    summary["status"] = "max_sweeps"
            except NonConvergenceError as exc:
                trace = exc.trace
                code = EXIT_NONCONVERGENCE
                summary["status"] = "diverged"
                summary["message"] = str(exc)
        else:
            dt = s.T / s.n_steps if s.n_steps else s.dt
            try:
                sol = etd_solve(a, s.T, dt, dealias=s.dealias, save_every=s.save_every)
            except BlowUpError as exc:
                sol = exc.solution
                code = EXIT_BLOWUP
                summary["status"] = "blow_up"
                summary["message"] = str(exc)
                summary["last_time"] = exc.last_time
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    summary.setdefault("status", "ok")
    summary["exit_code"] = code

    if trace is not None:
        _write(out / "trace.csv", _csv_text(TRACE_COLUMNS, trace.rows()))
        summary["converged"] = trace.converged
        summary["sweeps"] = trace.sweeps
        summary["trace_warnings"] = list(trace.warnings)
    if sol is not None:
        t_grid = np.logspace(-6.0, 0.0, cfg.output.seminorm_points + 2)[1:-1]
        lines = []
        for j, t in enumerate(sol.times):
            f = sol.field(j)
            rec = {"index": j, "time": float(t)}
            rec.update(norm_report(f, s.mu, t_grid=t_grid).to_dict())
            lines.append(json.dumps(_jsonable(rec), sort_keys=True, allow_nan=False) + "\n")
            if cfg.output.checkpoints:
                path = out / "checkpoints" / f"snapshot_{j:04d}.chk"
                path.parent.mkdir(parents=True, exist_ok=True)
                write_checkpoint(path, f, float(t))
        _write(out / "norms.jsonl", "".join(lines))
        summary["n_snapshots"] = len(sol)
        summary["final_time"] = float(sol.times[-1])
        summary["constraint_residual"] = sol.constraint_residual()
        ref = analytic_reference(cfg, a, float(sol.times[-1]))
        if ref is not None:
            summary["analytic_error"] = _rel_sup_error(sol.final, ref)
    _write(out / "summary.json", _dumps(summary))
    _write_metadata(out, "solve")
    return code


def verify_settings(cfg: RunConfig, inject_failure: bool = False) -> VerifySettings:
    v = cfg.verify
    inject = dict(v.inject)
    if inject_failure:
        # a rate of 0 instead of -1/2 must be flagged by the harness
        inject.setdefault("grad_semigroup", 0.0)
    kw = dict(seed=v.seed, tolerance=v.tolerance, r2_min=v.r2_min, t_range=(v.t_min, v.t_max),
              n_t=v.n_t, n_samples=v.n_samples, interpolation_trials=v.interpolation_trials,
              frac_gradient_trials=v.frac_gradient_trials, bilinear_pairs=v.bilinear_pairs,
              inject=inject)
    if v.suite:
        kw["suite"] = tuple(v.suite)
    return VerifySettings(**kw)


def cmd_verify(cfg: RunConfig, out: Path, inject_failure: bool = False) -> int:
    """Run the estimate suite; exit 0 iff every conclusive report passes."""
    reports = run_suite(verify_settings(cfg, inject_failure))
    if "jsonl" in cfg.output.formats:
        _write(out / "reports.jsonl", reports_to_jsonl(reports))
    if "csv" in cfg.output.formats:
        _write(out / "reports.csv", reports_to_csv(reports))
    _write_metadata(out, "verify")
    for r in reports:
        print(f"{r.estimate_id:32s} {r.verdict}")
    ok = all(r.verdict in ("pass", "inconclusive") for r in reports)
    return EXIT_OK if ok else EXIT_NONCONVERGENCE


def bound_respected(T_empirical: float, T_bound: float, rtol: float = 1e-12) -> bool:
    """``T_empirical >= T_bound`` up to rounding; the calibration row is equal by construction."""
    return T_empirical >= T_bound * (1.0 - rtol)


def lifespan_rows(cfg: RunConfig) -> tuple[list[dict], dict]:
    """Triple norm, bound and empirical existence time for each scale."""
    L = cfg.lifespan
    a = initial_data(cfg)
    t_grid = np.logspace(-6.0, 0.0, cfg.output.seminorm_points + 2)[1:-1]
    T_grid = L.T_max * 2.0 ** -np.arange(L.n_halvings + 1)
    rows = []
    for lam in L.scales:
        a_l = a * float(lam)
        rows.append({"lambda": float(lam), "triple_norm": triple_norm(a_l, L.mu, t_grid),
                     "T_empirical": empirical_existence_time(a_l, T_grid, n_steps=L.n_steps,
                                                            M_sweeps=L.M_sweeps, mu=L.mu)})
    c_star = L.c_star
    if c_star is None:
        if L.form != "max":
            raise ConfigError("calibrating c_* needs lifespan.form = max")
        T0 = rows[0]["T_empirical"]
        if not 0 < T0 <= 1:
            raise ConfigError(f"cannot calibrate c_* from an empirical existence time of {T0}")
        c_star = calibrate_c_star(rows[0]["triple_norm"], T0, L.mu)
    for r in rows:
        r["T_bound"] = lifespan_bound(r["triple_norm"], L.mu, c_star, L.form)
    info = {"c_star": c_star, "form": L.form, "mu": L.mu,
            "consistent": all(bound_respected(r["T_empirical"], r["T_bound"]) for r in rows)}
    return rows, info


def cmd_lifespan(cfg: RunConfig, out: Path) -> int:
    try:
        rows, info = lifespan_rows(cfg)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    _write(out / "lifespan.csv", _csv_text(LIFESPAN_COLUMNS, rows))
    _write(out / "lifespan.json", _dumps(info))
    _write_metadata(out, "lifespan")
    print(json.dumps(_jsonable(info), sort_keys=True))
    return EXIT_OK


def cmd_recursion(cfg: RunConfig) -> int:
    r = cfg.recursion
    res = majorant_recursion(r.A, r.eps, r.C1, r.C2, r.m_max)
    print(json.dumps(_jsonable(res.to_dict()), sort_keys=True))
    return EXIT_OK if res.bounded else EXIT_NONCONVERGENCE


# ---------------------------------------------------------------------------
# Argument parsing
# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="YAML configuration file")
    common.add_argument("--out", type=Path, help="output directory")
    common.add_argument("--seed", type=int, help="seed for data and suite (unsigned 64-bit)")
    common.add_argument("--threads", type=int, default=1, help="FFT worker threads")

    p = argparse.ArgumentParser(prog="hydrostokes", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)
    sub.add_parser("solve", parents=[common], help="mild-solution run")
    pv = sub.add_parser("verify", parents=[common], help="estimate suite")
    pv.add_argument("--inject-failure", action="store_true",
                    help="replace one predicted exponent by a wrong value")
    sub.add_parser("lifespan", parents=[common], help="life-span scaling sweep")
    pr = sub.add_parser("recursion", parents=[common], help="scalar majorant recursion")
    for name in ("A", "eps", "c1", "c2"):
        pr.add_argument(f"--{name}", type=float)
    pr.add_argument("--m-max", type=int)
    sub.add_parser("print-defaults", help="print the default configuration")
    return p


def _resolve_config(args) -> RunConfig:
    cfg = load_config(args.config) if args.config else config_from_dict({})
    if args.seed is not None:
        if not 0 <= args.seed < 2**64:
            raise ConfigError("--seed must be an unsigned 64-bit integer")
        cfg.data.seed = args.seed
        cfg.verify.seed = args.seed
    if args.command == "recursion":
        for flag, key in (("A", "A"), ("eps", "eps"), ("c1", "C1"), ("c2", "C2"), ("m_max", "m_max")):
            val = getattr(args, flag)
            if val is not None:
                setattr(cfg.recursion, key, val)
    return cfg.validate()


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "print-defaults":
        sys.stdout.write(defaults_yaml())
        return EXIT_OK
    try:
        cfg = _resolve_config(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    if args.threads is not None and args.threads < 1:
        print("error: --threads must be positive", file=sys.stderr)
        return EXIT_CONFIG
    out = Path(args.out) if args.out else Path(cfg.output.directory)
    workers = sfft.set_workers(args.threads) if args.threads else contextlib.nullcontext()
    with workers:
        try:
            if args.command == "solve":
                return cmd_solve(cfg, out)
            if args.command == "verify":
                return cmd_verify(cfg, out, args.inject_failure)
            if args.command == "lifespan":
                return cmd_lifespan(cfg, out)
            return cmd_recursion(cfg)
        except ConfigError as exc:
            print(f"error: {exc}", file=sys.stderr)
            return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
