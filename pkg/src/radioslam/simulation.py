"""Synthetic trajectories and received-signal sequences from a floor plan."""
from __future__ import annotations

from typing import List, Sequence

import numpy as np

from .geometry import Environment, FeatureTruth, ground_truth_features
from .signal import AmplitudeModel, SignalSpec, synthesize_received


def resample_polyline(waypoints, spacing: float = None, num_steps: int = None) -> np.ndarray:
    """Points at equal arc-length spacing along a polyline.

    Give either ``spacing`` (m) or ``num_steps``; the first waypoint is always
    the first point.
    """
    w = np.asarray(waypoints, dtype=float)
    if w.ndim != 2 or w.shape[1] != 2 or w.shape[0] < 2:
        raise ValueError("waypoints must be an (n >= 2, 2) array")
    seg = np.linalg.norm(np.diff(w, axis=0), axis=1)
    s = np.concatenate(([0.0], np.cumsum(seg)))
    if (spacing is None) == (num_steps is None):
        raise ValueError("give exactly one of spacing or num_steps")
    if spacing is not None:
        if spacing <= 0:
            raise ValueError("spacing must be > 0")
        stations = np.arange(0.0, s[-1] + 1e-9, spacing)
    else:
        stations = np.linspace(0.0, s[-1], int(num_steps))
    x = np.interp(stations, s, w[:, 0])
    y = np.interp(stations, s, w[:, 1])
    return np.column_stack((x, y))


def path_magnitudes(env: Environment, features) -> np.ndarray:
    """Reflection magnitude per visible feature: 1 for LOS, the wall's value for a VA."""
    return np.array([1.0 if f.kind == "PA" else env.surfaces[f.surface].reflection_amplitude
                     for f in features])


def generate_signals(env: Environment, trajectory: np.ndarray, spec: SignalSpec, amp: AmplitudeModel,
                     eta: float, rngs: Sequence[np.random.Generator]):
    """Received signals for every step and PA.

    ``rngs`` holds one generator per PA. Reflection phases are redrawn each
    step when ``amp.phase_per_step`` is set, otherwise drawn once per path
    (keyed by PA and surface) at first sight.

    Returns
    -------
    signals : ndarray, shape (K, J, M)
    truths : list of FeatureTruth, one per step
    """
    K, J = trajectory.shape[0], env.num_pas
    signals = np.zeros((K, J, spec.M), dtype=complex)
    truths: List[FeatureTruth] = []
    fixed_phase = {}
    for k, p in enumerate(trajectory):
        truth = ground_truth_features(env, p)
        truths.append(truth)
        for j in range(J):
            feats = truth.visible(j)
            d = np.array([f.path_length for f in feats])
            mags = path_magnitudes(env, feats)
            if amp.phase_per_step:
                phases = None
            else:
                phases = []
                for f in feats:
                    key = (j, f.surface)
                    if key not in fixed_phase:
                        fixed_phase[key] = rngs[j].uniform(0.0, 2 * np.pi)
                    phases.append(fixed_phase[key])
                phases = np.array(phases)
            signals[k, j] = synthesize_received(d, mags, spec, amp, eta, rngs[j], phases)
    return signals, truths
