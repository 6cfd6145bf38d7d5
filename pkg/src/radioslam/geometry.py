"""Floor plans, virtual anchors and first-order specular ray tracing.

Walls are finite 2D segments. A virtual anchor (VA) is the mirror image of a
physical anchor (PA) across the line through a wall; the reflected path length
equals the straight-line distance from the agent to the VA.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

#: Width of the band (m) inside which near-touching segments count as crossing.
TOLERANCE = 1e-9


def _as_point(p) -> np.ndarray:
    p = np.asarray(p, dtype=float)
    if p.shape != (2,):
        raise ValueError(f"expected a 2D point, got shape {p.shape}")
    return p


@dataclass(frozen=True)
class Surface:
    """A flat reflecting wall between endpoints ``a`` and ``b``."""

    a: np.ndarray
    b: np.ndarray
    reflection_amplitude: float = 0.7

    def __post_init__(self):
        a, b = _as_point(self.a), _as_point(self.b)
        if np.linalg.norm(b - a) <= TOLERANCE:
            raise ValueError("surface endpoints must differ")
        if not 0.0 < self.reflection_amplitude <= 1.0:
            raise ValueError("reflection_amplitude must lie in (0, 1]")
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)

    @property
    def direction(self) -> np.ndarray:
        d = self.b - self.a
        return d / np.linalg.norm(d)

    @property
    def normal(self) -> np.ndarray:
        d = self.direction
        return np.array([-d[1], d[0]])


@dataclass(frozen=True)
class Environment:
    surfaces: tuple
    pa_positions: tuple

    def __init__(self, surfaces: Sequence[Surface], pa_positions: Sequence):
        pas = tuple(_as_point(p) for p in pa_positions)
        if not pas:
            raise ValueError("an environment needs at least one physical anchor")
        surfaces = tuple(surfaces)
        for j, pa in enumerate(pas):
            for s in surfaces:
                if _point_segment_distance(pa, s.a, s.b) <= TOLERANCE:
                    raise ValueError(f"PA {j} lies on a surface")
        object.__setattr__(self, "surfaces", surfaces)
        object.__setattr__(self, "pa_positions", pas)

    @property
    def num_pas(self) -> int:
        return len(self.pa_positions)


@dataclass(frozen=True)
class Feature:
    """Ground-truth PA or VA as seen from one agent position.

    ``visible`` is False only for a PA whose LOS path is blocked; such an
    entry does not contribute to the received signal.
    """

    position: np.ndarray
    path_length: float
    kind: str  # "PA" or "VA"
    surface: Optional[int] = None
    visible: bool = True


@dataclass
class FeatureTruth:
    """Per-PA lists of features; entry 0 of every list is the PA itself."""

    per_pa: list = field(default_factory=list)

    def visible(self, j: int) -> list:
        return [f for f in self.per_pa[j] if f.visible]

    def counts(self) -> list:
        return [len(self.visible(j)) for j in range(len(self.per_pa))]


def mirror_point(p, s: Surface) -> np.ndarray:
    """Reflect ``p`` across the infinite line through ``s``."""
    p = np.asarray(p, dtype=float)
    n = s.normal
    return p - 2.0 * np.dot(p - s.a, n) * n


def _orient(a, b, c) -> float:
    return (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])


def _point_segment_distance(p, a, b) -> float:
    ab = b - a
    t = np.clip(np.dot(p - a, ab) / np.dot(ab, ab), 0.0, 1.0)
    return float(np.linalg.norm(p - (a + t * ab)))


def segments_intersect(p1, p2, q1, q2, tol: float = TOLERANCE) -> bool:
    """True if segments p1-p2 and q1-q2 cross or come within ``tol`` of each other."""
    p1, p2, q1, q2 = (np.asarray(v, dtype=float) for v in (p1, p2, q1, q2))
    len_p = np.linalg.norm(p2 - p1)
    len_q = np.linalg.norm(q2 - q1)
    # orientation values scaled to signed distances
    d1 = _orient(q1, q2, p1) / len_q
    d2 = _orient(q1, q2, p2) / len_q
    d3 = _orient(p1, p2, q1) / len_p
    d4 = _orient(p1, p2, q2) / len_p
    if ((d1 > tol and d2 < -tol) or (d1 < -tol and d2 > tol)) and (
        (d3 > tol and d4 < -tol) or (d3 < -tol and d4 > tol)
    ):
        return True
    # grazing and collinear cases
    return min(
        _point_segment_distance(p1, q1, q2),
        _point_segment_distance(p2, q1, q2),
        _point_segment_distance(q1, p1, p2),
        _point_segment_distance(q2, p1, p2),
    ) <= tol


def _line_crossing(p1, p2, s: Surface) -> Optional[np.ndarray]:
    """Point where segment p1-p2 crosses the segment ``s``, or None."""
    r = p2 - p1
    d = s.b - s.a
    denom = r[0] * d[1] - r[1] * d[0]
    if abs(denom) < 1e-15:
        return None
    w = s.a - p1
    t = (w[0] * d[1] - w[1] * d[0]) / denom
    u = (w[0] * r[1] - w[1] * r[0]) / denom
    seg_len = np.linalg.norm(d)
    band = TOLERANCE / seg_len
    if t < -1e-12 or t > 1 + 1e-12 or u < -band or u > 1 + band:
        return None
    return p1 + t * r


def is_obstructed(p1, p2, env: Environment, skip: Sequence[int] = ()) -> bool:
    for i, s in enumerate(env.surfaces):
        if i in skip:
            continue
        if segments_intersect(p1, p2, s.a, s.b):
            return True
    return False


def specular_path(agent, pa, s: Surface, env: Environment):
    """First-order reflection of the agent-PA link at surface ``s``.

    Returns
    -------
    (bounce_point, path_length) or None
        None when the mirror-image ray misses the finite wall or either leg
        is blocked by another wall.
    """
    agent = _as_point(agent)
    pa = _as_point(pa)
    # agent and PA must face the same side of the wall
    side_agent = np.dot(agent - s.a, s.normal)
    side_pa = np.dot(pa - s.a, s.normal)
    if side_agent * side_pa <= 0.0:
        return None
    va = mirror_point(pa, s)
    bounce = _line_crossing(agent, va, s)
    if bounce is None:
        return None
    idx = _surface_index(s, env)
    skip = (idx,) if idx is not None else ()
    if is_obstructed(agent, bounce, env, skip) or is_obstructed(bounce, pa, env, skip):
        return None
    return bounce, float(np.linalg.norm(agent - va))


def _surface_index(s: Surface, env: Environment) -> Optional[int]:
    for i, other in enumerate(env.surfaces):
        if other is s:
            return i
    for i, other in enumerate(env.surfaces):
        if np.array_equal(other.a, s.a) and np.array_equal(other.b, s.b):
            return i
    return None


def ground_truth_features(env: Environment, agent) -> FeatureTruth:
    """LOS plus every valid first-order VA for each PA."""
    agent = _as_point(agent)
    truth = FeatureTruth()
    for pa in env.pa_positions:
        los_blocked = is_obstructed(agent, pa, env)
        feats = [Feature(pa.copy(), float(np.linalg.norm(agent - pa)), "PA", None, not los_blocked)]
        for i, s in enumerate(env.surfaces):
            hit = specular_path(agent, pa, s, env)
            if hit is not None:
                feats.append(Feature(mirror_point(pa, s), hit[1], "VA", i))
        truth.per_pa.append(feats)
    return truth
