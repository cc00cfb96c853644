"""Command-line driver: simulate, kernel, certify, verify, sweep.

Every numeric artifact is CSV with a leading ``#`` comment naming units and
conventions.  Reports are flat ``key=value`` text.  Exit status is 0 on
success, 1 on error and 2 when a certificate or inequality check fails.

Any flag may also come from ``--config FILE`` holding ``key=value`` lines
(keys are flag names without the leading dashes); explicit flags win.
"""

from __future__ import annotations

import argparse
import csv
import io
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from typing import List, Optional

import numpy as np

from . import __version__
from .certificates import EXIT_ERROR, EXIT_FAIL, EXIT_PASS, certify
from .characteristics import advect, breaking_window, default_seeds, detect_breaking, sigma_set
from .errors import NoNegativeSlope, WavebreakError
from .grid import Field, PeriodicGrid
from .inequalities import (CSV_HEADER, delta_grid, lemma_n3_sweep, splitting_bound_check,
                           summary_lines, whitham_splitting_check)
from .kernel import QuadratureSpec, build_kernel_table
from .solver import SolveConfig, run, suggest_dt
from .symbols import DispersionSymbol

INIT_CHOICES = ("neg-sine", "gaussian", "two-bump", "random", "file")


# ------------------------------------------------------------------ inputs

def make_symbol(model: str, alpha: Optional[float]) -> DispersionSymbol:
    if model == "whitham":
        return DispersionSymbol.whitham()
    if model == "kdv":
        return DispersionSymbol.kdv()
    if model == "fkdv":
        if alpha is None:
            raise WavebreakError("alpha out of range: --alpha is required for --model fkdv")
        return DispersionSymbol.fractional(alpha)
    raise WavebreakError(f"unknown model {model!r}")


def initial_field(args) -> Field:
    """Built-in datum family or a CSV of ``u`` (or ``x,u``) values."""
    if args.init == "file":
        if not args.init_file:
            raise WavebreakError("--init file needs --init-file")
        vals = _read_values(args.init_file)
        grid = PeriodicGrid(vals.size, args.period)
        return Field(grid, vals)
    grid = PeriodicGrid(args.grid, args.period)
    x = grid.x
    P = grid.period
    A = args.amplitude
    w = args.width
    if args.init == "neg-sine":
        vals = -A * np.sin(2.0 * math.pi * x / P)
    elif args.init == "gaussian":
        vals = A * np.exp(-((x - 0.5 * P) / w) ** 2)
    elif args.init == "two-bump":
        # opposite signs and unequal widths make the profile asymmetric
        c1, c2 = 0.5 * P - w, 0.5 * P + w
        vals = A * (np.exp(-((x - c1) / w) ** 2) - args.ratio * np.exp(-((x - c2) / (args.width2 * w)) ** 2))
    elif args.init == "random":
        rng = np.random.default_rng(args.seed)
        modes = args.modes
        spec = np.zeros(grid.n_points // 2 + 1, dtype=complex)
        ks = np.arange(1, modes + 1)
        spec[1:modes + 1] = (rng.normal(size=modes) + 1j * rng.normal(size=modes)) / ks ** 2
        vals = np.fft.irfft(spec, grid.n_points)
        vals *= A / np.max(np.abs(vals))
    else:
        raise WavebreakError(f"unknown init {args.init!r}")
    return Field(grid, vals)


def _read_values(path) -> np.ndarray:
    rows = []
    with open(path, newline="") as fh:
        for row in csv.reader(fh):
            if not row or row[0].lstrip().startswith("#"):
                continue
            try:
                rows.append([float(v) for v in row])
            except ValueError:
                continue  # header line
    if not rows:
        raise WavebreakError(f"no numeric rows in {path}")
    arr = np.asarray(rows)
    return arr[:, -1]


def read_config_file(path) -> dict:
    out = {}
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise WavebreakError(f"{path}:{lineno}: expected key=value")
            key, val = (s.strip() for s in line.split("=", 1))
            out[key.replace("-", "_")] = val
    return out


# ----------------------------------------------------------------- outputs

def _write_csv(path, comment: str, header, rows):
    with open(path, "w", newline="") as fh:
        fh.write(f"# {comment}\n")
        wr = csv.writer(fh, lineterminator="\n")
        wr.writerow(header)
        for row in rows:
            wr.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v for v in row])


def _echo_config(args, path):
    skip = {"func", "config"}
    with open(path, "w") as fh:
        fh.write(f"# resolved configuration, wavebreak {__version__}\n")
        for key in sorted(vars(args)):
            if key in skip:
                continue
            val = getattr(args, key)
            if isinstance(val, (list, tuple)):
                val = ",".join(repr(v) for v in val)
            elif isinstance(val, float):
                val = repr(val)
            fh.write(f"{key}={val}\n")


def _index_ranges(indices) -> str:
    idx = sorted(indices)
    if not idx:
        return ""
    parts, start, prev = [], idx[0], idx[0]
    for i in idx[1:]:
        if i != prev + 1:
            parts.append(f"{start}-{prev}" if prev > start else f"{start}")
            start = i
        prev = i
    parts.append(f"{start}-{prev}" if prev > start else f"{start}")
    return ",".join(parts)


# -------------------------------------------------------------- commands

def simulate_to_dir(args, out_dir) -> dict:
    """Run one simulation and write its artifacts; returns summary fields."""
    os.makedirs(out_dir, exist_ok=True)
    sym = make_symbol(args.model, args.alpha)
    u0 = initial_field(args)
    _echo_config(args, os.path.join(out_dir, "config.txt"))
    m0 = float(u0.derivative(1).values.min())
    t_max = args.t_max
    if args.until_breaking and m0 < 0:
        t_max = max(t_max, 4.0 / abs(m0))
    dt = args.dt if args.dt is not None else suggest_dt(u0, args.dealias)
    cfg = SolveConfig(sym, dt_initial=dt, dt_floor=args.dt_floor, dealias_fraction=args.dealias,
                      slope_stop=args.slope_stop, t_max=t_max, sample_stride=args.stride,
                      max_snapshots=args.max_snapshots)
    res = run(u0, cfg)
    _write_csv(os.path.join(out_dir, "timeseries.csv"),
               f"model={sym.label}; t in model time units; min_slope = refined grid min of u_x; "
               "q = m(0)/m(t); mass = integral of u; l2 = integral of u^2",
               ["t", "min_slope", "q", "mass", "l2", "dt"], res.timeseries_rows())
    for tag, (t, f) in (("initial", res.trajectory[0]), ("final", res.trajectory[len(res.trajectory) - 1])):
        _write_csv(os.path.join(out_dir, f"snapshot_{tag}.csv"), f"snapshot at t={t!r}; x in cell units",
                   ["x", "u"], zip(f.grid.x, f.values))

    summary = {"outcome": res.outcome.value, "T_estimate": math.nan, "inside_window": False,
               "detected": False, "message": res.message, "m0": m0}
    try:
        report = detect_breaking(res.history, args.epsilon)
        with open(os.path.join(out_dir, "breaking_report.txt"), "w") as fh:
            fh.write(f"outcome={res.outcome.value}\n")
            fh.write(report.to_record())
        summary.update(T_estimate=report.T_estimate, inside_window=report.inside_window,
                       detected=report.detected, exponent=report.exponent, m0=report.m0)
    except NoNegativeSlope as exc:
        with open(os.path.join(out_dir, "breaking_report.txt"), "w") as fh:
            fh.write(f"outcome={res.outcome.value}\ndetected=false\nreason={exc}\n")

    if args.seeds > 0 and len(res.trajectory) >= 2:
        seeds = default_seeds(u0, args.seeds)
        bundle = advect(res.trajectory, seeds)
        pdir = os.path.join(out_dir, "paths")
        os.makedirs(pdir, exist_ok=True)
        for j in range(bundle.n_seeds):
            _write_csv(os.path.join(pdir, f"seed_{j:04d}.csv"),
                       f"seed x0={bundle.seeds[j]!r}; jac = dX/dx; phi1 = nonlocal slope forcing",
                       ["t", "X", "v0", "v1", "jac", "phi1"], bundle.path_rows(j))
    if m0 < 0:
        for gamma in args.gammas:
            with open(os.path.join(out_dir, f"sigma_gamma{gamma:g}.txt"), "w") as fh:
                fh.write(f"# grid indices with u_x <= (1-gamma) min u_x, gamma={gamma!r}\n")
                for t in res.trajectory.times:
                    s = sigma_set(res.trajectory, gamma, t)
                    fh.write(f"t={s.t!r} m={s.m!r} indices={_index_ranges(s.member_indices)}\n")
    return summary


def cmd_simulate(args) -> int:
    simulate_to_dir(args, args.out)
    with open(os.path.join(args.out, "breaking_report.txt")) as fh:
        sys.stdout.write(fh.read())
    return EXIT_PASS


def kernel_csv(table, quad: QuadratureSpec) -> str:
    buf = io.StringIO()
    buf.write(f"# Whitham kernel K(x), x > 0; quadrature tol={quad.tol!r} split={quad.split!r}; "
              f"k0={table.k0!r} k_inf={table.k_inf!r} delta0={table.delta0!r}\n")
    wr = csv.writer(buf, lineterminator="\n")
    wr.writerow(["x", "K", "Kprime", "sqrt_2pix_K"])
    for x, k, kp, r in zip(table.xs, table.k_vals, table.kp_vals, table.asymptotic_ratio()):
        wr.writerow([repr(float(x)), repr(float(k)), repr(float(kp)), repr(float(r))])
    return buf.getvalue()


def cmd_kernel(args) -> int:
    quad = QuadratureSpec(tol=args.tol)
    fit = args.x_min <= 1e-4 and args.x_max >= 10.0
    table = build_kernel_table(args.x_min, args.x_max, args.points, quad, args.delta0, fit=fit)
    text = kernel_csv(table, quad)
    _emit(text, args.out)
    return EXIT_PASS


def cmd_certify(args) -> int:
    sym = make_symbol(args.model, args.alpha)
    u0 = initial_field(args)
    cert = certify(u0, sym, args.epsilon, args.b, args.n_max)
    _emit(cert.to_record(), args.out)
    return cert.exit_code


def _smooth_suite(n_points: int):
    grid = PeriodicGrid(n_points)
    return {
        "sin": grid.field(np.sin),
        "exp_sin": grid.field(lambda x: np.exp(np.sin(x))),
        "two_mode": grid.field(lambda x: np.sin(3 * x) + 0.5 * np.cos(7 * x)),
        "gaussian": grid.field(lambda x: np.exp(-4.0 * (x - np.pi) ** 2)),
    }


def cmd_verify(args) -> int:
    reports = []
    if args.lemma == "n3":
        reports = lemma_n3_sweep(args.n_max, args.alphas)
    elif args.lemma == "splitting":
        suite = _smooth_suite(args.grid)
        dx = next(iter(suite.values())).grid.dx
        for u in suite.values():
            for a in args.alphas:
                for n in range(args.orders + 1):
                    for d in delta_grid(dx, 1.0):
                        reports.append(splitting_bound_check(u, n, a, d))
    elif args.lemma == "whitham-splitting":
        table = build_kernel_table()
        suite = _smooth_suite(args.grid)
        dx = next(iter(suite.values())).grid.dx
        for u in suite.values():
            for n in range(args.orders + 1):
                for d in delta_grid(dx, table.delta0, include_hi=False):
                    reports.append(whitham_splitting_check(u, n, d, table))
    buf = io.StringIO()
    buf.write("# inequality reports; lhs and rhs to 17 digits; ratio = lhs/rhs\n")
    wr = csv.writer(buf, lineterminator="\n")
    wr.writerow(CSV_HEADER)
    for r in reports:
        wr.writerow(r.csv_row())
    _emit(buf.getvalue(), args.out)
    for line in summary_lines(reports):
        print(line)
    return EXIT_PASS if all(r.passed for r in reports) else EXIT_FAIL


def _sweep_point(payload):
    args, out_dir = payload
    try:
        return simulate_to_dir(args, out_dir), None
    except Exception as exc:  # recorded per point, the sweep goes on
        return None, f"{type(exc).__name__}: {exc}"


def cmd_sweep(args) -> int:
    os.makedirs(args.out, exist_ok=True)
    points = []
    alphas = args.alphas if args.model == "fkdv" else [None]
    for a in alphas:
        for amp in args.amplitudes:
            point = argparse.Namespace(**vars(args))
            point.alpha, point.amplitude = a, amp
            point.epsilon = min(args.epsilons)
            tag = f"run_alpha{a:g}_amp{amp:g}" if a is not None else f"run_amp{amp:g}"
            points.append((point, os.path.join(args.out, tag)))
    jobs = args.jobs or os.cpu_count() or 1
    if jobs == 1:
        results = [_sweep_point(p) for p in points]
    else:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_sweep_point, points))

    rows = []
    for (point, out_dir), (summary, err) in zip(points, results):
        for eps in args.epsilons:
            if summary is None:
                rows.append([point.alpha, eps, point.amplitude, "error", math.nan, err])
                continue
            T = summary["T_estimate"]
            verdict = "no-breaking"
            if summary["detected"]:
                lo, hi = breaking_window(summary["m0"], eps)
                verdict = "inside" if lo < T < hi else "outside"
            rows.append([point.alpha, eps, point.amplitude, summary["outcome"], T, verdict])
    _write_csv(os.path.join(args.out, "index.csv"), "sweep index; T_estimate in model time units",
               ["alpha", "epsilon", "amplitude", "outcome", "T_estimate", "window_check"], rows)
    return EXIT_PASS if all(err is None for _, err in results) else EXIT_ERROR


def _emit(text: str, out: Optional[str]):
    if out:
        with open(out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


# ------------------------------------------------------------------ parser

def _floats(text: str) -> List[float]:
    return [float(v) for v in str(text).split(",") if v.strip()]


def _add_datum(p):
    p.add_argument("--model", choices=("whitham", "fkdv", "kdv"), default="fkdv")
    p.add_argument("--alpha", type=float, default=None)
    p.add_argument("--init", choices=INIT_CHOICES, default="neg-sine")
    p.add_argument("--init-file", default=None)
    p.add_argument("--amplitude", type=float, default=1.0)
    p.add_argument("--width", type=float, default=0.5)
    p.add_argument("--width2", type=float, default=2.0, help="second bump width relative to the first")
    p.add_argument("--ratio", type=float, default=0.6, help="second bump height relative to the first")
    p.add_argument("--modes", type=int, default=8)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--grid", type=int, default=1024)
    p.add_argument("--period", type=float, default=2.0 * math.pi)


def _add_run(p):
    p.add_argument("--t-max", type=float, default=2.0)
    p.add_argument("--until-breaking", action="store_true")
    p.add_argument("--dt", type=float, default=None, help="initial step; default from a CFL estimate")
    p.add_argument("--dt-floor", type=float, default=1e-9)
    p.add_argument("--dealias", type=float, default=2.0 / 3.0)
    p.add_argument("--slope-stop", type=float, default=None)
    p.add_argument("--stride", type=int, default=10)
    p.add_argument("--max-snapshots", type=int, default=1000)
    p.add_argument("--epsilon", type=float, default=0.1)
    p.add_argument("--seeds", type=int, default=0, help="characteristics seeds (0 disables)")
    p.add_argument("--gammas", type=_floats, default=[0.3])


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="wavebreak", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="evolve a datum and detect breaking")
    _add_datum(p)
    _add_run(p)
    p.add_argument("--out", default="run")
    p.add_argument("--config", default=None)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("kernel", help="tabulate the Whitham kernel")
    p.add_argument("--x-min", type=float, default=1e-4)
    p.add_argument("--x-max", type=float, default=10.0)
    p.add_argument("--points", type=int, default=200)
    p.add_argument("--tol", type=float, default=1e-10)
    p.add_argument("--delta0", type=float, default=0.5)
    p.add_argument("--out", default=None)
    p.add_argument("--config", default=None)
    p.set_defaults(func=cmd_kernel)

    p = sub.add_parser("certify", help="check breaking hypotheses on a datum")
    _add_datum(p)
    p.add_argument("--epsilon", type=float, default=0.1)
    p.add_argument("--b", type=float, default=1.0)
    p.add_argument("--n-max", type=int, default=20)
    p.add_argument("--out", default=None)
    p.add_argument("--config", default=None)
    p.set_defaults(func=cmd_certify)

    p = sub.add_parser("verify", help="brute-force inequality checks")
    p.add_argument("--lemma", choices=("n3", "splitting", "whitham-splitting"), default="n3")
    p.add_argument("--n-max", type=int, default=60)
    p.add_argument("--alphas", type=_floats, default=[0.1, 0.25, 0.5, 0.65])
    p.add_argument("--orders", type=int, default=2, help="derivative orders 0..orders for splitting checks")
    p.add_argument("--grid", type=int, default=1024)
    p.add_argument("--out", default=None)
    p.add_argument("--config", default=None)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("sweep", help="simulate over parameter axes")
    _add_datum(p)
    _add_run(p)
    p.add_argument("--alphas", type=_floats, default=[1.0])
    p.add_argument("--epsilons", type=_floats, default=[0.1])
    p.add_argument("--amplitudes", type=_floats, default=[1.0])
    p.add_argument("--jobs", type=int, default=0, help="worker processes; 0 means all cores")
    p.add_argument("--out", default="sweep")
    p.add_argument("--config", default=None)
    p.set_defaults(func=cmd_sweep)
    return parser


def parse_args(argv=None) -> argparse.Namespace:
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "config", None):
        values = read_config_file(args.config)
        sub = parser._subparsers._group_actions[0].choices[args.command]
        known = {a.dest: a for a in sub._actions}
        converted = {}
        for key, raw in values.items():
            if key == "command":
                continue  # present in echoed configs
            if key not in known:
                raise WavebreakError(f"unknown config key {key!r}")
            act = known[key]
            if raw == "None":
                converted[key] = None
            elif act.nargs == 0:
                converted[key] = raw.lower() in ("1", "true", "yes")
            else:
                converted[key] = act.type(raw) if act.type else raw
        sub.set_defaults(**converted)
        args = parser.parse_args(argv)
    return args


def main(argv=None) -> int:
    try:
        args = parse_args(argv)
        return args.func(args)
    except (WavebreakError, ValueError, OSError) as exc:
        sys.stderr.write(f"error type={type(exc).__name__} message={exc}\n")
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
