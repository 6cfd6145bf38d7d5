"""Accuracy metrics: agent RMSE, empirical CDFs, GOSPA mapping error and
track-loss detection, plus fixed-column CSV writers for each of them."""
from __future__ import annotations

import csv
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np
from scipy.optimize import linear_sum_assignment

#: Position error (m) and window length (steps) of the track-loss rule.
TRACK_LOSS_THRESHOLD = 1.0
TRACK_LOSS_WINDOW = 20


@dataclass
class RunMetrics:
    """Per-step metrics of one Monte Carlo run."""

    errors: np.ndarray  # (K,) agent position error, m
    gospa: np.ndarray  # (K, J) mapping error per PA, m
    eta_hat: np.ndarray  # (K, J)
    features: List[list] = field(default_factory=list)  # per step: declared positions
    track_lost: bool = False
    track_loss_onset: Optional[int] = None

    def __post_init__(self):
        self.errors = np.asarray(self.errors, dtype=float)
        self.gospa = np.atleast_2d(np.asarray(self.gospa, dtype=float))
        self.eta_hat = np.atleast_2d(np.asarray(self.eta_hat, dtype=float))
        if np.any(self.errors < 0) or np.any(self.gospa < 0):
            raise ValueError("errors and GOSPA values must be non-negative")


def _point_array(points) -> np.ndarray:
    a = np.asarray(points, dtype=float)
    if a.size == 0:
        return np.zeros((0, 2))
    return a.reshape(-1, 2)


def gospa(estimates, truth, c: float = 2.0, p: float = 1.0) -> float:
    """GOSPA distance (``alpha = 2``) between two finite 2D point sets.

    Each matched pair costs ``min(d, c)^p``; every unmatched point on either
    side costs ``c^p / 2``. The best assignment comes from
    :func:`scipy.optimize.linear_sum_assignment` on the matching gains
    ``min(d, c)^p - c^p`` (a pair with ``d >= c`` gains nothing over leaving
    both points unmatched, so the rectangular problem is exact).
    """
    if not c > 0:
        raise ValueError("cutoff c must be > 0")
    if not p >= 1:
        raise ValueError("order p must be >= 1")
    X, Y = _point_array(estimates), _point_array(truth)
    n, m = len(X), len(Y)
    total = 0.5 * c**p * (n + m)
    if n and m:
        d = np.linalg.norm(X[:, None, :] - Y[None, :, :], axis=-1)
        gain = np.minimum(d, c) ** p - c**p
        rows, cols = linear_sum_assignment(gain)
        total += gain[rows, cols].sum()
    return float(max(total, 0.0) ** (1.0 / p))


def rmse_per_step(runs: Sequence[RunMetrics], exclude_lost: bool = True) -> np.ndarray:
    """Root mean squared agent error across runs at each step.

    Runs flagged as track losses are left out when ``exclude_lost`` is set,
    unless every run is lost.
    """
    if not runs:
        raise ValueError("need at least one run")
    lengths = {r.errors.shape[0] for r in runs}
    if len(lengths) != 1:
        raise ValueError("all runs must have the same number of steps")
    use = [r for r in runs if not (exclude_lost and r.track_lost)] or list(runs)
    E = np.stack([r.errors for r in use])
    return np.sqrt(np.mean(E**2, axis=0))


def detect_track_loss(errors, threshold: float = TRACK_LOSS_THRESHOLD,
                      window: int = TRACK_LOSS_WINDOW) -> Tuple[bool, Optional[int]]:
    """Flag a run whose error passes ``threshold`` and keeps growing.

    A step ``k0`` with ``errors[k0] > threshold`` marks a loss if the mean of
    the final ``window`` errors exceeds the mean of the ``window`` errors that
    follow ``k0``. Returns the flag and the first such ``k0`` (0-based).
    """
    e = np.asarray(errors, dtype=float)
    if e.size == 0:
        return False, None
    tail = e[-window:].mean()
    for k0 in np.flatnonzero(e > threshold):
        after = e[k0 + 1:k0 + 1 + window]
        if after.size == 0:
            after = e[k0:k0 + 1]
        if tail > after.mean():
            return True, int(k0)
    return False, None


def empirical_cdf(values) -> Tuple[np.ndarray, np.ndarray]:
    """Distinct sorted values and the right-continuous empirical CDF at each."""
    v = np.sort(np.asarray(values, dtype=float).ravel())
    if v.size == 0:
        raise ValueError("empirical_cdf needs at least one value")
    uniq = np.unique(v)
    counts = np.searchsorted(v, uniq, side="right")
    return uniq, counts / v.size


# ---------------------------------------------------------------------------
# CSV output; one header row, '.' decimals, floats written with repr


def _fmt(x) -> str:
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return repr(float(x))


def _write(path, header, rows):
    try:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(header)
            for row in rows:
                w.writerow([_fmt(x) for x in row])
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc}") from exc


def write_rmse_csv(path, rmse) -> None:
    _write(path, ["step", "rmse"], ((k + 1, r) for k, r in enumerate(rmse)))


def write_cdf_csv(path, values, fractions) -> None:
    _write(path, ["value", "cdf"], zip(values, fractions))


def write_gospa_csv(path, gospa_mean: np.ndarray) -> None:
    """``gospa_mean`` has shape ``(K, J)``."""
    g = np.atleast_2d(gospa_mean)
    header = ["step"] + [f"gospa_pa{j + 1}" for j in range(g.shape[1])]
    _write(path, header, ([k + 1, *row] for k, row in enumerate(g)))


def write_eta_csv(path, eta_true: float, eta_hat_mean: np.ndarray) -> None:
    e = np.atleast_2d(eta_hat_mean)
    header = ["step", "eta_true"] + [f"eta_hat_pa{j + 1}" for j in range(e.shape[1])]
    _write(path, header, ([k + 1, eta_true, *row] for k, row in enumerate(e)))
