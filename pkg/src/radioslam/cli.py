"""Command-line entry point: ``radioslam {run,eval,trace}``.

``run``    simulate a scenario and write records, metrics and a manifest
``eval``   recompute the metric CSVs from an existing output directory
``trace``  print the matched-filter delay spectra of one step as CSV
"""
from __future__ import annotations

import argparse
import csv
import logging
import sys
from typing import List, Optional

import numpy as np

from .config import ConfigError, load_config, with_overrides
from .outputs import emit_outputs, load_outputs, write_metrics
from .runner import WORKERS_ENV, run_all, run_metrics, simulate
from .signal import matched_filter_spectrum

log = logging.getLogger("radioslam")


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="radioslam", description="Direct-SLAM on synthetic radio signals.")
    p.add_argument("-v", "--verbose", action="count", default=0, help="more logging (repeatable)")
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="run a scenario's Monte Carlo repetitions")
    r.add_argument("config", help="scenario YAML file")
    r.add_argument("--out", required=True, help="output directory")
    r.add_argument("--runs", type=int, help="number of runs (overrides n_runs)")
    r.add_argument("--seed", type=int, help="base seed (overrides base_seed)")
    r.add_argument("--particles", type=int, help="agent and PF particle count")
    r.add_argument("--noise-particles", type=int, help="noise-variance particle count")
    r.add_argument("--workers", type=int,
                   help=f"worker processes (default: ${WORKERS_ENV} or 1)")

    e = sub.add_parser("eval", help="metric CSVs from a run directory")
    e.add_argument("records", help="directory written by 'run'")
    e.add_argument("--out", help="where to write the CSVs (default: the records directory)")

    t = sub.add_parser("trace", help="matched-filter spectra of one step")
    t.add_argument("config", help="scenario YAML file")
    t.add_argument("--run", type=int, default=0, help="run index (default 0)")
    t.add_argument("--step", type=int, default=1, help="time step, 1-based (default 1)")
    t.add_argument("--seed", type=int, help="base seed (overrides base_seed)")
    t.add_argument("--out", help="CSV file (default: stdout)")
    return p


def _cmd_run(args) -> int:
    cfg = with_overrides(load_config(args.config), n_runs=args.runs, base_seed=args.seed,
                         particles=args.particles, noise_particles=args.noise_particles)
    records = run_all(cfg, args.workers)
    emit_outputs(records, args.out, cfg)
    J = len(cfg.environment.pa_positions)
    for rec in records:
        if rec.failed:
            print(f"run {rec.run_index}: FAILED ({rec.error})")
            continue
        m = run_metrics(rec, J, cfg.evaluation.gospa_cutoff, cfg.evaluation.gospa_order,
                        cfg.evaluation.include_pa)
        print(f"run {rec.run_index}: {len(rec.steps)} steps, median error {np.median(m.errors):.4f} m, "
              f"final error {m.errors[-1]:.4f} m, track lost {m.track_lost}")
    print(f"wrote {args.out}")
    return 1 if all(r.failed for r in records) else 0


def _cmd_eval(args) -> int:
    cfg, records = load_outputs(args.records)
    paths = write_metrics([r for r in records if not r.failed], cfg, args.out or args.records)
    for p in paths:
        print(f"wrote {p}")
    return 0


def _cmd_trace(args) -> int:
    cfg = with_overrides(load_config(args.config), base_seed=args.seed)
    if args.run < 0:
        raise ConfigError("--run must be >= 0")
    env, traj, signals, _, _ = simulate(cfg, args.run)
    if not 1 <= args.step <= traj.shape[0]:
        raise ConfigError(f"--step must lie in [1, {traj.shape[0]}]")
    spec = cfg.signal.spec()
    spectra = [matched_filter_spectrum(z, spec) for z in signals[args.step - 1]]
    header = ["cell", "delay_s", "range_m"] + [f"mf_pa{j + 1}" for j in range(env.num_pas)]
    fh = open(args.out, "w", newline="") if args.out else sys.stdout
    try:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for m in range(spec.M):
            w.writerow([m + 1, repr(float(spec.delay_grid[m])), repr(m * spec.cell_width)]
                       + [repr(float(s[m])) for s in spectra])
    finally:
        if args.out:
            fh.close()
    return 0


def main(argv: Optional[List[str]] = None) -> int:
    args = _parser().parse_args(argv)
    level = [logging.WARNING, logging.INFO, logging.DEBUG][min(args.verbose, 2)]
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")
    commands = {"run": _cmd_run, "eval": _cmd_eval, "trace": _cmd_trace}
    try:
        return commands[args.command](args)
    except (ConfigError, OSError, ValueError) as exc:
        print(f"radioslam {args.command}: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
