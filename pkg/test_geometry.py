"""
Geometry tests: distances, intersections, stadiums and the minimax value
"""

import math

import numpy as np
import pytest

from leak_cover.core.geometry import (
    Ball,
    GeometryError,
    Norm,
    Point,
    Segment,
    ball_segment_intersection,
    batch_distances,
    epsilon_star,
    in_stadium,
    minimax_value,
    point_segment_distance,
    point_segment_norm_distance,
    segment_segment_distance,
    segments_cross,
)


def seg(ax, ay, bx, by):
    return Segment(Point(ax, ay), Point(bx, by))


def sampled_point_distance(q, s, n=100_000):
    t = np.linspace(0.0, 1.0, n)
    a, b = np.array(s.a), np.array(s.b)
    pts = a + t[:, None] * (b - a)
    return float(np.linalg.norm(pts - np.asarray(q), axis=1).min())


def test_point_segment_distance_examples():
    dist, mu = point_segment_distance((0, 0), seg(1, -1, 1, 1))
    assert (dist, mu) == pytest.approx((1.0, 0.5))
    dist, mu = point_segment_distance((3, 0), seg(0, 0, 1, 0))
    assert (dist, mu) == pytest.approx((2.0, 1.0))


def test_point_segment_distance_matches_sampling():
    rng = np.random.default_rng(7)
    for _ in range(100):
        q = rng.uniform(-3, 3, size=2)
        a, b = rng.uniform(-3, 3, size=(2, 2))
        s = seg(*a, *b)
        dist, _ = point_segment_distance(q, s)
        assert dist == pytest.approx(sampled_point_distance(q, s), abs=1e-4)


def test_degenerate_segment_rejected():
    with pytest.raises(GeometryError):
        point_segment_distance((0, 0), seg(1, 1, 1, 1))


def test_segment_distance_examples():
    assert segments_cross(seg(-1, 0, 1, 0), seg(0, -1, 0, 1))
    assert segment_segment_distance(seg(-1, 0, 1, 0), seg(0, -1, 0, 1)) == 0.0
    assert segment_segment_distance(seg(0, 0, 1, 0), seg(0, 3, 1, 3)) == pytest.approx(3.0)


def test_segment_distance_matches_sampling():
    rng = np.random.default_rng(11)
    t = np.linspace(0.0, 1.0, 400)
    for _ in range(100):
        a1, b1, a2, b2 = rng.uniform(-3, 3, size=(4, 2))
        p1 = a1 + t[:, None] * (b1 - a1)
        p2 = a2 + t[:, None] * (b2 - a2)
        sampled = np.linalg.norm(p1[:, None, :] - p2[None, :, :], axis=2).min()
        exact = segment_segment_distance(seg(*a1, *b1), seg(*a2, *b2))
        assert exact <= sampled + 1e-9
        assert exact == pytest.approx(sampled, abs=0.05)


@pytest.mark.parametrize("norm", [Norm.L1, Norm.LINF])
def test_polyhedral_distance_matches_sampling(norm):
    rng = np.random.default_rng(3)
    t = np.linspace(0.0, 1.0, 20_001)
    order = 1 if norm == Norm.L1 else np.inf
    for _ in range(50):
        q = rng.uniform(-3, 3, size=2)
        a, b = rng.uniform(-3, 3, size=(2, 2))
        pts = a + t[:, None] * (b - a)
        sampled = np.linalg.norm(pts - q, ord=order, axis=1).min()
        exact = point_segment_norm_distance(q, seg(*a, *b), norm)
        assert exact == pytest.approx(sampled, abs=1e-3)


def test_batch_distances_shape():
    points = np.zeros((3, 2))
    origins = np.array([[1.0, 0.0], [0.0, 2.0]])
    targets = np.array([[2.0, 0.0], [1.0, 2.0]])
    values = batch_distances(points, origins, targets, Norm.L2)
    assert values.shape == (3, 2)
    assert np.allclose(values[:, 0], 1.0)
    assert np.allclose(values[:, 1], 2.0)


def test_ball_segment_intersection_examples():
    line = seg(-2, 0, 2, 0)
    circle = Ball(norm=Norm.L2, radius=1.0)
    assert ball_segment_intersection((0, 0), circle, line) == pytest.approx((0.25, 0.75))
    assert ball_segment_intersection((0, 5), circle, line) is None
    assert ball_segment_intersection((0, 1), circle, line) == pytest.approx((0.5, 0.5))

    square = Ball(norm=Norm.LINF, radius=1.0)
    assert ball_segment_intersection((0, 0), square, seg(-2, 0.5, 2, 0.5)) == pytest.approx((0.25, 0.75))


def test_intersection_clipped_to_segment():
    circle = Ball(norm=Norm.L2, radius=1.0)
    assert ball_segment_intersection((0, 0), circle, seg(0, 0, 4, 0)) == pytest.approx((0.0, 0.25))
    assert ball_segment_intersection((0, 0), Ball(norm=Norm.L2, radius=10.0), seg(0, 0, 4, 0)) == pytest.approx((0.0, 1.0))


def test_l1_intersection():
    diamond = Ball(norm=Norm.L1, radius=1.0)
    lo, hi = ball_segment_intersection((0, 0), diamond, seg(-2, 0.5, 2, 0.5))
    assert lo == pytest.approx(0.375)
    assert hi == pytest.approx(0.625)


@pytest.mark.parametrize("norm", [Norm.L1, Norm.L2, Norm.LINF])
def test_intersection_endpoints_on_boundary(norm):
    rng = np.random.default_rng(5)
    ball = Ball(norm=norm, radius=1.0)
    order = {Norm.L1: 1, Norm.L2: 2, Norm.LINF: np.inf}[norm]
    for _ in range(50):
        center = rng.uniform(-1, 1, size=2)
        a, b = rng.uniform(-3, 3, size=(2, 2))
        s = seg(*a, *b)
        result = ball_segment_intersection(center, ball, s)
        if result is None:
            assert point_segment_norm_distance(center, s, norm) > 1.0 - 1e-9
            continue
        for lam in result:
            point = a + lam * (b - a)
            assert np.linalg.norm(point - center, ord=order) <= 1.0 + 1e-9


def test_stadium_examples():
    r = 0.5
    l2 = Ball(norm=Norm.L2, radius=r)
    unit = seg(0, 0, 1, 0)
    assert in_stadium((0.5, r * 0.99), unit, l2)
    assert not in_stadium((0.5, r * 1.01), unit, l2)
    assert in_stadium((2, 0), unit, Ball(norm=Norm.L1, radius=1.0))


def test_epsilon_star_common_point():
    segments = [seg(-1, 0, 1, 0), seg(0, -1, 0, 1), seg(-1, -1, 1, 1)]
    eps, center = epsilon_star(segments, 1.0)
    assert eps == pytest.approx(-1.0, abs=1e-6)
    assert math.hypot(*center) == pytest.approx(0.0, abs=1e-4)


def test_epsilon_star_equilateral_triangle():
    vertices = [(2.0 * math.cos(a), 2.0 * math.sin(a)) for a in (math.pi / 2, 7 * math.pi / 6, 11 * math.pi / 6)]
    segments = [Segment(Point(*v), Point(*v)) for v in vertices]
    eps, center = epsilon_star(segments, 1.0)
    assert eps == pytest.approx(1.0, abs=1e-4)
    assert center.x == pytest.approx(0.0, abs=1e-3)
    assert center.y == pytest.approx(0.0, abs=1e-3)


def test_epsilon_star_empty_rejected():
    with pytest.raises(GeometryError):
        epsilon_star([], 1.0)


@pytest.mark.parametrize("norm", [Norm.L2, Norm.LINF, Norm.L1])
def test_epsilon_star_matches_grid(norm):
    rng = np.random.default_rng(13)
    for _ in range(5):
        ends = rng.uniform(-2, 2, size=(3, 2, 2))
        segments = [seg(*a, *b) for a, b in ends]
        eps, center = epsilon_star(segments, 0.5, norm)
        assert minimax_value(center, segments, norm) - 0.5 == pytest.approx(eps)

        points = ends.reshape(-1, 2)
        low, high = points.min(axis=0) - 1.0, points.max(axis=0) + 1.0
        xs = np.linspace(low[0], high[0], 200)
        ys = np.linspace(low[1], high[1], 200)
        grid = np.array([(x, y) for x in xs for y in ys])
        origins, targets = ends[:, 0, :], ends[:, 1, :]
        best = batch_distances(grid, origins, targets, norm).max(axis=1).min() - 0.5
        step = max(xs[1] - xs[0], ys[1] - ys[0])
        assert eps <= best + 1e-9
        assert eps >= best - 2 * step
