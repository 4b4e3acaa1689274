"""Command-line front end.

Subcommands ``simulate``, ``gap-curve``, ``correlations``, ``invariant``,
``spectrum`` and ``verify``. Every command reads an experiment from
``--config`` or ``--preset``; ``--seed`` and ``--out`` override the file.
Exit codes: 0 success, 1 verification failure, 2 usage or configuration
error.
"""
from __future__ import annotations

import argparse
import csv
import json
import math
import sys
import time
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import complete_graph as cg
from . import two_point as tp
from .chain import stationary_distribution
from .config import ConfigError, ExperimentConfig, load_config, load_preset, preset_names
from .engine import (
    configurations,
    empirical_measure,
    fv_generator_matrix,
    simulate,
    write_trajectory_csv,
)
from .errors import StateSpaceTooLarge
from .montecarlo import DEFAULT_SEED, mc_samples
from .spectral import dense_spectrum, tridiagonal_spectrum
from .verification import SCOPES, run_verification

CORRELATION_HEADER = ("t", "analytic_cov", "mc_cov", "stderr", "bound")


class UsageError(Exception):
    pass


def _seed(text):
    try:
        value = int(text, 0)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if not 0 <= value < 2**64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return value


def _resolve(args) -> ExperimentConfig:
    if args.config and args.preset:
        raise UsageError("use either --config or --preset, not both")
    if args.config:
        cfg = load_config(args.config)
    elif args.preset:
        cfg = load_preset(args.preset)
    else:
        raise UsageError("this command needs --config or --preset")
    if args.seed is not None:
        cfg = replace(cfg, seed=args.seed)
    if args.out is not None:
        cfg = replace(cfg, out=args.out)
    return cfg


def _open_out(path):
    if path is None or path == "-":
        return sys.stdout, False
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    return open(path, "w", encoding="utf-8", newline=""), True


def _write_json(obj, path):
    fh, close = _open_out(path)
    try:
        json.dump(obj, fh, indent=2, sort_keys=False)
        fh.write("\n")
    finally:
        if close:
            fh.close()


def _num(x):
    return "" if x is None else repr(float(x))


# simulate -----------------------------------------------------------------------

def cmd_simulate(cfg: ExperimentConfig, timing=False):
    """Event log as CSV plus a JSON summary.

    With an output path the log goes to it and the summary to the same path
    with a ``.json`` suffix; otherwise the log goes to stdout and the
    summary to stderr.
    """
    params = cfg.model_params()
    model = params.fv_model()
    eta0 = cfg.initial()
    start = time.perf_counter()
    traj = simulate(model, eta0, cfg.horizon, seed=cfg.seed)
    elapsed = time.perf_counter() - start
    measure = empirical_measure(traj.final)
    summary = {
        "model": cfg.model,
        "params": {k: (str(v) if not isinstance(v, (int, float)) else v) for k, v in cfg.params},
        "seed": cfg.seed,
        "horizon": cfg.horizon,
        "eta0": list(eta0),
        "final": list(traj.final),
        "empirical_measure": [float(x) for x in measure.weights],
        "event_counts": dict(traj.counts),
        "events": len(traj.events),
    }
    if timing:
        summary["wall_time_s"] = elapsed
    if cfg.out is None:
        write_trajectory_csv(traj, sys.stdout)
        json.dump(summary, sys.stderr, indent=2)
        sys.stderr.write("\n")
    else:
        out = Path(cfg.out)
        out.parent.mkdir(parents=True, exist_ok=True)
        write_trajectory_csv(traj, out)
        _write_json(summary, out.with_suffix(".json"))
    return 0


# gap curve ----------------------------------------------------------------------

def cmd_gap_curve(cfg: ExperimentConfig, workers=1):
    if cfg.model != "two-point":
        raise UsageError("gap-curve needs a two-point model")
    grid = cfg.require_grid("n_grid")
    reports = tp.gap_curve(cfg.model_params(), grid, workers=workers)
    fh, close = _open_out(cfg.out)
    try:
        tp.write_gap_curve_csv(reports, fh)
    finally:
        if close:
            fh.close()
    return 0


# correlations ---------------------------------------------------------------------

class _PairObservable:
    """Occupations of sites 1 and 2 at the grid times; picklable for worker processes."""

    def __init__(self, model, eta0, horizon, times):
        self.args = (model, eta0, horizon, times)

    def __call__(self, rng):
        model, eta0, horizon, times = self.args
        snaps = simulate(model, eta0, horizon, seed=rng, record=False, observe_at=times).snapshots
        return np.array([[s[0], s[1]] for s in snaps], dtype=float)


def correlation_table(cfg: ExperimentConfig, workers=1):
    """Rows ``(t, analytic, mc, stderr, bound)`` for the normalized two-site covariance."""
    params = cfg.model_params()
    times = cfg.require_grid("t_grid")
    eta0 = cfg.initial()
    big = params.N
    horizon = max(times)
    if cfg.replicas < 2:
        raise UsageError("correlations need at least two replicas")
    samples = mc_samples(_PairObservable(params.fv_model(), eta0, horizon, times), cfg.replicas, cfg.seed, workers)
    x, y = samples[:, :, 0] / big, samples[:, :, 1] / big
    centered = (x - x.mean(axis=0)) * (y - y.mean(axis=0))
    reps = cfg.replicas
    mc = centered.sum(axis=0) / (reps - 1)
    err = centered.std(axis=0, ddof=1) / math.sqrt(reps)
    rows = []
    for i, t in enumerate(times):
        if cfg.model == "complete-graph":
            m1, m2 = float(eta0[0]), float(eta0[1])
            analytic = cg.covariance_dynamics(params, m1, m2, m1 * m2, t) / big**2
            bound = None
        else:
            analytic = tp.exact_covariance(params, eta0[0], t)
            bound = tp.correlation_bound(params, t)
        rows.append((t, analytic, float(mc[i]), float(err[i]), bound))
    return rows


def cmd_correlations(cfg: ExperimentConfig, workers=1):
    rows = correlation_table(cfg, workers)
    fh, close = _open_out(cfg.out)
    try:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(CORRELATION_HEADER)
        for t, analytic, mc, err, bound in rows:
            writer.writerow([_num(t), _num(analytic), _num(mc), _num(err), _num(bound)])
    finally:
        if close:
            fh.close()
    return 0


# invariant and spectrum --------------------------------------------------------------

def invariant_report(cfg: ExperimentConfig) -> dict:
    params = cfg.model_params()
    if cfg.model == "complete-graph":
        closed = cg.invariant_law(params)
        oracle = stationary_distribution(fv_generator_matrix(params.fv_model()))
        support = [list(s) for s in configurations(params.N, params.K)]
    else:
        closed = tp.invariant_pi(params)
        oracle = stationary_distribution(tp.birth_death_reduction(params).generator())
        support = list(range(params.N + 1))
    diff = float(np.abs(closed.weights - oracle.weights).max())
    return {
        "model": cfg.model,
        "support": support,
        "closed_form": [float(x) for x in closed.weights],
        "oracle": [float(x) for x in oracle.weights],
        "max_abs_diff": diff,
    }


def spectrum_report(cfg: ExperimentConfig) -> dict:
    params = cfg.model_params()
    if cfg.model == "complete-graph":
        report = dense_spectrum(fv_generator_matrix(params.fv_model()), cg.invariant_law(params))
        return {"model": cfg.model, **report.to_dict()}
    spec = tp.birth_death_reduction(params)
    report = tridiagonal_spectrum(spec, tp.invariant_pi(params))
    out = {"model": cfg.model, **report.to_dict()}
    if params.N + 1 <= 400:
        dense = dense_spectrum(spec.generator(), tp.invariant_pi(params))
        out["dense_max_abs_diff"] = float(np.abs(dense.eigenvalues - report.eigenvalues).max())
    return out


# verify ---------------------------------------------------------------------------------

def cmd_verify(scope, seed, out, workers=1, quiet=False):
    def progress(entry):
        if not quiet:
            print(f"[{entry['verdict']}] {entry['id']}: measured={entry['measured']:.6g} "
                  f"tol={entry['tolerance']:.3g} ({entry['runtime_s']:.2f}s)", file=sys.stderr)

    report = run_verification(scope, seed, workers, progress=progress)
    _write_json(report, out)
    return 0 if report["passed"] else 1


# argument parsing ---------------------------------------------------------------------------

def build_parser():
    parser = argparse.ArgumentParser(prog="flemingviot", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, config=True):
        if config:
            p.add_argument("--config", help="experiment configuration file")
            p.add_argument("--preset", help=f"shipped configuration: {', '.join(preset_names())}")
        p.add_argument("--seed", type=_seed, default=None, help="master seed (decimal or 0x hex)")
        p.add_argument("--out", default=None, help="output path ('-' for stdout)")
        p.add_argument("--workers", type=int, default=1, help="worker processes")

    p = sub.add_parser("simulate", help="one trajectory: event log CSV and JSON summary")
    common(p)
    p.add_argument("--timing", action="store_true", help="add wall time to the summary")
    common(sub.add_parser("gap-curve", help="two-point gap curve CSV"))
    common(sub.add_parser("correlations", help="analytic vs Monte Carlo two-site covariance CSV"))
    common(sub.add_parser("invariant", help="closed-form and oracle invariant laws"))
    common(sub.add_parser("spectrum", help="spectrum of the generator"))
    p = sub.add_parser("verify", help="run the acceptance checks")
    common(p, config=False)
    p.add_argument("--scope", choices=SCOPES, default="all")
    p.add_argument("--quiet", action="store_true")
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "verify":
            seed = DEFAULT_SEED if args.seed is None else args.seed
            return cmd_verify(args.scope, seed, args.out, args.workers, args.quiet)
        cfg = _resolve(args)
        if args.command == "simulate":
            return cmd_simulate(cfg, args.timing)
        if args.command == "gap-curve":
            return cmd_gap_curve(cfg, args.workers)
        if args.command == "correlations":
            return cmd_correlations(cfg, args.workers)
        if args.command == "invariant":
            _write_json(invariant_report(cfg), cfg.out)
            return 0
        if args.command == "spectrum":
            _write_json(spectrum_report(cfg), cfg.out)
            return 0
    except (ConfigError, UsageError, StateSpaceTooLarge) as exc:
        print(f"flemingviot {args.command}: error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"flemingviot {args.command}: error: {exc}", file=sys.stderr)
        return 2
    parser.error(f"unknown command {args.command}")


if __name__ == "__main__":
    sys.exit(main())
