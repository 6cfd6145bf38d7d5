"""Seeded Monte Carlo runs of the SLAM engine on synthetic scenarios.

Every run draws from its own counter-based streams,
``Philox(SeedSequence(base_seed, spawn_key=(run, stream)))``: stream ``j``
generates the data of PA ``j`` and the last stream drives inference. A run's
output therefore depends only on the config and its index, whatever the
order or the process it runs in.
"""
from __future__ import annotations

import logging
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import List, Optional, Sequence

import numpy as np

from . import engine
from .config import ScenarioConfig, config_hash
from .evaluation import RunMetrics, detect_track_loss, gospa
from .geometry import Environment, Surface
from .signal import AmplitudeModel
from .simulation import generate_signals, resample_polyline

log = logging.getLogger(__name__)

#: Environment variable giving the number of worker processes for runs.
WORKERS_ENV = "RADIOSLAM_WORKERS"


@dataclass
class StepRecord:
    step: int  # 1-based
    agent_true: List[float]
    agent_estimate: List[float]  # px, py, vx, vy
    features: List[dict]  # declared: pa, label, position, intensity, existence, is_pa
    eta_hat: List[float]
    truth: List[List[dict]]  # per PA: visible features as {kind, position}

    def to_dict(self) -> dict:
        return {
            "step": self.step,
            "agent_true": self.agent_true,
            "agent_estimate": self.agent_estimate,
            "features": self.features,
            "eta_hat": self.eta_hat,
            "truth": self.truth,
        }


@dataclass
class RunRecord:
    run_index: int
    base_seed: int
    config_hash: str
    eta_true: float
    steps: List[StepRecord] = field(default_factory=list)
    failed: bool = False
    error: Optional[str] = None

    def header(self) -> dict:
        return {
            "run_index": self.run_index,
            "base_seed": self.base_seed,
            "config_hash": self.config_hash,
            "eta_true": self.eta_true,
            "num_steps": len(self.steps),
            "failed": self.failed,
            "error": self.error,
        }


def build_environment(cfg: ScenarioConfig) -> Environment:
    surfaces = [Surface(s.a, s.b, s.reflection_amplitude) for s in cfg.environment.surfaces]
    return Environment(surfaces, cfg.environment.pa_positions)


def build_trajectory(cfg: ScenarioConfig) -> np.ndarray:
    t = cfg.trajectory
    if t.positions is not None:
        return np.asarray(t.positions, dtype=float).reshape(-1, 2)
    return resample_polyline(t.waypoints, spacing=t.spacing, num_steps=t.num_steps)


def run_streams(base_seed: int, run_index: int, num_pas: int) -> List[np.random.Generator]:
    """``num_pas`` data streams followed by one inference stream."""
    return [
        np.random.Generator(np.random.Philox(np.random.SeedSequence(base_seed, spawn_key=(run_index, s))))
        for s in range(num_pas + 1)
    ]


def simulate(cfg: ScenarioConfig, run_index: int):
    """Trajectory, received signals and ground truth of one run."""
    env = build_environment(cfg)
    traj = build_trajectory(cfg)
    spec = cfg.signal.spec()
    amp = AmplitudeModel(cfg.signal.f_c, cfg.amplitude.normalize_at_1m, cfg.amplitude.phase_per_step)
    streams = run_streams(cfg.base_seed, run_index, env.num_pas)
    signals, truths = generate_signals(env, traj, spec, amp, cfg.noise_variance, streams[:-1])
    return env, traj, signals, truths, streams[-1]


def _truth_entries(truth) -> List[List[dict]]:
    return [[{"kind": f.kind, "position": f.position.tolist()} for f in feats if f.visible]
            for feats in truth.per_pa]


def run_experiment(cfg: ScenarioConfig, run_index: int) -> RunRecord:
    """One Monte Carlo run; engine failures are recorded, not raised."""
    env, traj, signals, truths, rng = simulate(cfg, run_index)
    spec = cfg.signal.spec()
    rec = RunRecord(run_index, cfg.base_seed, config_hash(cfg), cfg.noise_variance)
    beliefs = engine.initialize_beliefs(traj[0], env.pa_positions, cfg.particles.agent, cfg.particles.noise,
                                        cfg.model, cfg.prior, rng)
    gamma_max = cfg.prior.intensity_max
    for k in range(traj.shape[0]):
        try:
            beliefs, est = engine.step(beliefs, signals[k], cfg.model, spec, rng, gamma_max=gamma_max)
        except (engine.DegeneracyError, engine.NumericalError) as exc:
            rec.failed = True
            rec.error = f"step {k + 1}: {type(exc).__name__}: {exc}"
            log.warning("run %d failed at %s", run_index, rec.error)
            break
        feats = [
            {
                "pa": f.pa_index,
                "label": f.label,
                "position": f.position.tolist(),
                "intensity": f.gamma,
                "existence": f.existence,
                "is_pa": f.is_pa,
            }
            for f in est.features
        ]
        rec.steps.append(StepRecord(k + 1, traj[k].tolist(), est.agent_state.tolist(), feats,
                                    list(est.eta_hat), _truth_entries(truths[k])))
    return rec


def _worker_count(workers: Optional[int]) -> int:
    if workers is None:
        workers = int(os.environ.get(WORKERS_ENV, "1"))
    return max(1, workers)


def run_all(cfg: ScenarioConfig, workers: Optional[int] = None) -> List[RunRecord]:
    """All ``cfg.n_runs`` runs, in parallel processes when ``workers > 1``."""
    idx = list(range(cfg.n_runs))
    n = min(_worker_count(workers), len(idx))
    if n == 1:
        return [run_experiment(cfg, i) for i in idx]
    with ProcessPoolExecutor(max_workers=n) as pool:
        return list(pool.map(run_experiment, [cfg] * len(idx), idx))


# ---------------------------------------------------------------------------
# metrics


def run_metrics(rec: RunRecord, num_pas: int, cutoff: float = 2.0, order: float = 1.0,
                include_pa: bool = True) -> RunMetrics:
    """Position errors, per-PA GOSPA and noise estimates of a finished run."""
    K = len(rec.steps)
    errors = np.zeros(K)
    g = np.zeros((K, num_pas))
    eta = np.zeros((K, num_pas))
    declared = []
    for i, s in enumerate(rec.steps):
        errors[i] = np.hypot(s.agent_estimate[0] - s.agent_true[0], s.agent_estimate[1] - s.agent_true[1])
        eta[i] = s.eta_hat
        step_feats = []
        for j in range(num_pas):
            est = [f["position"] for f in s.features if f["pa"] == j and (include_pa or not f["is_pa"])]
            truth = [t["position"] for t in s.truth[j] if include_pa or t["kind"] != "PA"]
            g[i, j] = gospa(est, truth, cutoff, order)
            step_feats.append(est)
        declared.append(step_feats)
    lost, onset = detect_track_loss(errors)
    return RunMetrics(errors, g, eta, declared, lost, onset)


def metrics_for(records: Sequence[RunRecord], cfg: ScenarioConfig) -> List[RunMetrics]:
    ev = cfg.evaluation
    J = len(cfg.environment.pa_positions)
    return [run_metrics(r, J, ev.gospa_cutoff, ev.gospa_order, ev.include_pa) for r in records if not r.failed]
