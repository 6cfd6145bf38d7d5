"""Writing and reading experiment output directories.

Layout of an output directory::

    manifest.json          expanded config, its hash, package versions, run list
    runs/run_000.jsonl     one JSON object per time step of run 0
    rmse.csv               step, rmse
    error_cdf.csv          value, cdf
    gospa.csv              step, gospa_pa1, gospa_pa2, ...
    eta.csv                step, eta_true, eta_hat_pa1, ...

Everything is a pure function of the records and the config: no timestamps,
sorted JSON keys and ``repr`` floats, so re-emitting gives identical bytes.
"""
from __future__ import annotations

import json
import platform
from importlib import metadata
from pathlib import Path
from typing import List, Sequence, Tuple

import numpy as np

from . import evaluation
from .config import ScenarioConfig, config_from_dict, config_hash, config_to_dict
from .runner import RunRecord, StepRecord, metrics_for

MANIFEST = "manifest.json"
RUNS_DIR = "runs"
METRIC_FILES = ("rmse.csv", "error_cdf.csv", "gospa.csv", "eta.csv")


def _versions() -> dict:
    out = {"python": platform.python_version()}
    for dist in ("artifact", "numpy", "scipy", "PyYAML"):
        try:
            out[dist] = metadata.version(dist)
        except metadata.PackageNotFoundError:
            out[dist] = "unknown"
    return out


def _dump(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


def run_file(out_dir, run_index: int) -> Path:
    return Path(out_dir) / RUNS_DIR / f"run_{run_index:03d}.jsonl"


def write_metrics(records: Sequence[RunRecord], cfg: ScenarioConfig, out_dir) -> List[Path]:
    """Aggregate metric CSVs over the runs that did not fail."""
    metrics = metrics_for(records, cfg)
    if not metrics:
        raise ValueError("no completed runs to evaluate")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    rmse = evaluation.rmse_per_step(metrics, exclude_lost=cfg.evaluation.exclude_lost_runs)
    used = [m for m in metrics if not (cfg.evaluation.exclude_lost_runs and m.track_lost)] or metrics
    values, fractions = evaluation.empirical_cdf(np.concatenate([m.errors for m in used]))
    paths = [out / name for name in METRIC_FILES]
    evaluation.write_rmse_csv(paths[0], rmse)
    evaluation.write_cdf_csv(paths[1], values, fractions)
    evaluation.write_gospa_csv(paths[2], np.mean([m.gospa for m in metrics], axis=0))
    evaluation.write_eta_csv(paths[3], cfg.noise_variance, np.mean([m.eta_hat for m in metrics], axis=0))
    return paths


def emit_outputs(records: Sequence[RunRecord], out_dir, cfg: ScenarioConfig) -> List[Path]:
    """Write run records, metric CSVs and the manifest; returns the files written.

    Metric CSVs are skipped (and the manifest says so) when every run failed.
    """
    if not records:
        raise ValueError("need at least one record")
    out = Path(out_dir)
    try:
        (out / RUNS_DIR).mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise OSError(f"cannot create {out / RUNS_DIR}: {exc}") from exc
    written = []
    for rec in records:
        path = run_file(out, rec.run_index)
        try:
            with open(path, "w", encoding="utf-8", newline="\n") as fh:
                for s in rec.steps:
                    fh.write(_dump(s.to_dict()) + "\n")
        except OSError as exc:
            raise OSError(f"cannot write {path}: {exc}") from exc
        written.append(path)
    completed = [r for r in records if not r.failed]
    if completed:
        written += write_metrics(completed, cfg, out)
    manifest = {
        "config": config_to_dict(cfg),
        "config_hash": config_hash(cfg),
        "versions": _versions(),
        "metrics": bool(completed),
        "runs": [rec.header() for rec in sorted(records, key=lambda r: r.run_index)],
    }
    path = out / MANIFEST
    try:
        path.write_text(json.dumps(manifest, sort_keys=True, indent=2) + "\n", encoding="utf-8")
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc}") from exc
    written.append(path)
    return written


def load_outputs(out_dir) -> Tuple[ScenarioConfig, List[RunRecord]]:
    """Config and run records from a directory written by :func:`emit_outputs`."""
    out = Path(out_dir)
    try:
        manifest = json.loads((out / MANIFEST).read_text(encoding="utf-8"))
    except OSError as exc:
        raise OSError(f"cannot read {out / MANIFEST}: {exc}") from exc
    cfg = config_from_dict(manifest["config"])
    records = []
    for head in manifest["runs"]:
        rec = RunRecord(head["run_index"], head["base_seed"], head["config_hash"], head["eta_true"],
                        failed=head["failed"], error=head["error"])
        path = run_file(out, rec.run_index)
        try:
            lines = path.read_text(encoding="utf-8").splitlines()
        except OSError as exc:
            raise OSError(f"cannot read {path}: {exc}") from exc
        rec.steps = [StepRecord(**json.loads(line)) for line in lines if line]
        if len(rec.steps) != head["num_steps"]:
            raise ValueError(f"{path}: expected {head['num_steps']} steps, found {len(rec.steps)}")
        if [s.step for s in rec.steps] != list(range(1, len(rec.steps) + 1)):
            raise ValueError(f"{path}: steps are not contiguous from 1")
        records.append(rec)
    return cfg, records
