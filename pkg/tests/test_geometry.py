import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from radioslam.geometry import (
    Environment,
    Surface,
    ground_truth_features,
    mirror_point,
    segments_intersect,
    specular_path,
)

coord = st.floats(-20, 20, allow_nan=False)
point = st.tuples(coord, coord)


def _surface(a, b):
    if np.hypot(b[0] - a[0], b[1] - a[1]) < 1e-3:
        b = (a[0] + 1.0, a[1])
    return Surface(a, b)


def test_mirror_across_x_axis():
    np.testing.assert_allclose(mirror_point((1, 2), Surface((0, 0), (1, 0))), (1, -2))


def test_point_on_line_is_fixed():
    s = Surface((0, 0), (1, 1))
    np.testing.assert_allclose(mirror_point((3, 3), s), (3, 3), atol=1e-12)


@given(point, point, point)
def test_mirror_is_an_involution_and_keeps_line_distance(p, a, b):
    s = _surface(a, b)
    q = mirror_point(p, s)
    np.testing.assert_allclose(mirror_point(q, s), p, atol=1e-9)
    dist = lambda x: abs(np.dot(np.asarray(x) - s.a, s.normal))
    assert dist(q) == pytest.approx(dist(p), abs=1e-9)


def test_surface_rejects_degenerate_and_bad_amplitude():
    with pytest.raises(ValueError):
        Surface((1, 1), (1, 1))
    with pytest.raises(ValueError):
        Surface((0, 0), (1, 0), reflection_amplitude=1.5)


def test_symmetric_specular_path():
    s = Surface((0, 0), (2, 0))
    env = Environment([s], [(2, 1)])
    bounce, length = specular_path((0, 1), (2, 1), s, env)
    np.testing.assert_allclose(bounce, (1, 0), atol=1e-12)
    assert length == pytest.approx(2 * np.sqrt(2))


def test_bounce_outside_segment_gives_none():
    s = Surface((3, 0), (4, 0))
    env = Environment([s], [(2, 1)])
    assert specular_path((0, 1), (2, 1), s, env) is None


def _blocked_by_sampling(p, q, wall, n=20001):
    """Oracle: dense points along p-q, any within 1e-6 of the wall segment."""
    t = np.linspace(0, 1, n)[:, None]
    pts = np.asarray(p) + t * (np.asarray(q) - np.asarray(p))
    a, b = wall.a, wall.b
    u = np.clip(((pts - a) @ (b - a)) / np.dot(b - a, b - a), 0, 1)
    d = np.linalg.norm(pts - (a + u[:, None] * (b - a)), axis=1)
    return bool(np.any(d < 1e-3))


def test_third_surface_blocks_leg():
    floor = Surface((0, 0), (2, 0))
    blocker = Surface((0.5, -0.5), (0.5, 0.9))
    env = Environment([floor, blocker], [(2, 1)])
    assert _blocked_by_sampling((0, 1), (1, 0), blocker)
    assert specular_path((0, 1), (2, 1), floor, env) is None


@given(point, point, point, point)
def test_segment_intersection_matches_sampling(p1, p2, q1, q2):
    if np.hypot(p2[0] - p1[0], p2[1] - p1[1]) < 0.5 or np.hypot(q2[0] - q1[0], q2[1] - q1[1]) < 0.5:
        return
    wall = Surface(q1, q2)
    fast = segments_intersect(p1, p2, q1, q2)
    dense = _blocked_by_sampling(p1, p2, wall, n=40001)
    if fast != dense:
        # only near-grazing configurations may disagree with the sampled oracle
        t = np.linspace(0, 1, 40001)[:, None]
        pts = np.asarray(p1) + t * (np.subtract(p2, p1))
        a, b = wall.a, wall.b
        u = np.clip(((pts - a) @ (b - a)) / np.dot(b - a, b - a), 0, 1)
        assert np.min(np.linalg.norm(pts - (a + u[:, None] * (b - a)), axis=1)) < 5e-3


def test_no_surfaces_gives_los_only():
    env = Environment([], [(1, 1), (5, 5)])
    truth = ground_truth_features(env, (3, 2))
    assert truth.counts() == [1, 1]
    assert truth.per_pa[0][0].kind == "PA"
    assert truth.per_pa[0][0].path_length == pytest.approx(np.hypot(2, 1))


def test_one_wall_same_side_gives_los_and_one_va():
    env = Environment([Surface((-10, 0), (10, 0))], [(2, 3)])
    truth = ground_truth_features(env, (-1, 1))
    assert truth.counts() == [2]
    va = truth.per_pa[0][1]
    np.testing.assert_allclose(va.position, (2, -3))
    assert va.path_length == pytest.approx(np.hypot(3, 4))


def test_blocked_los_is_kept_but_invisible():
    env = Environment([Surface((0, -5), (0, 5))], [(1, 0)])
    truth = ground_truth_features(env, (-1, 0))
    assert truth.per_pa[0][0].visible is False
    assert truth.counts() == [0]


@given(st.floats(0.5, 9.5), st.floats(0.5, 7.5), st.floats(0.5, 9.5), st.floats(0.5, 7.5))
def test_box_room_paths_are_longer_than_los(ax, ay, px, py):
    if np.hypot(ax - px, ay - py) < 1e-3:
        return
    walls = [Surface((0, 0), (10, 0)), Surface((10, 0), (10, 8)), Surface((10, 8), (0, 8)), Surface((0, 8), (0, 0))]
    env = Environment(walls, [(px, py)])
    feats = ground_truth_features(env, (ax, ay)).visible(0)
    los = feats[0].path_length
    assert len(feats) == 5  # convex room: every wall gives a reflection
    for f in feats[1:]:
        assert f.path_length >= los - 1e-9
        assert f.path_length == pytest.approx(np.linalg.norm(np.subtract((ax, ay), f.position)))


def test_approximate_hall_feature_counts_at_start():
    from radioslam.config import load_config
    from radioslam.runner import build_environment, build_trajectory
    from conftest import SCENARIOS

    cfg = load_config(SCENARIOS / "hall_679_approx.yaml")
    truth = ground_truth_features(build_environment(cfg), build_trajectory(cfg)[0])
    assert truth.counts() == [4, 5]
