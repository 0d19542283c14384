"""
Compatibility table tests
"""

import itertools
import math

import numpy as np
import pytest

from conftest import make_network
from leak_cover.core.compatibility import (
    IncompatibilityTable,
    build_table,
    edge_segment,
    helly_compatible,
    is_compatible_set,
    pairwise_incompatible,
    table_from_dict,
    triple_incompatible,
)
from leak_cover.core.geometry import TOL_EPS, Ball, Norm, batch_distances, epsilon_star, in_stadium


@pytest.fixture
def parallel_far():
    return make_network(
        {"A": (0, 0), "B": (1, 0), "C": (0, 3), "D": (1, 3)},
        [("low", "A", "B", 1.0), ("high", "C", "D", 1.0)],
    )


@pytest.fixture
def tangent_triangle():
    """Three short segments tangent to the circle of radius 2 at the vertices of an equilateral triangle"""
    nodes, edges = {}, []
    for k, angle in enumerate((math.pi / 2, 7 * math.pi / 6, 11 * math.pi / 6)):
        cx, cy = 2.0 * math.cos(angle), 2.0 * math.sin(angle)
        tx, ty = -math.sin(angle) * 0.05, math.cos(angle) * 0.05
        nodes[f"a{k}"] = (cx - tx, cy - ty)
        nodes[f"b{k}"] = (cx + tx, cy + ty)
        edges.append((f"e{k}", f"a{k}", f"b{k}", 1.0))
    return make_network(nodes, edges)


def test_parallel_pair(parallel_far):
    assert pairwise_incompatible(parallel_far, Ball(radius=1.0)) == {("high", "low")}
    assert pairwise_incompatible(parallel_far, Ball(radius=2.0)) == set()


def test_pair_matches_grid_oracle(gessler):
    ball = Ball(radius=0.5)
    pairs = pairwise_incompatible(gessler, ball)
    nodes = gessler.node_array()
    xs = np.linspace(nodes[:, 0].min() - 1, nodes[:, 0].max() + 1, 120)
    ys = np.linspace(nodes[:, 1].min() - 1, nodes[:, 1].max() + 1, 120)
    grid = np.array([(x, y) for x in xs for y in ys])
    origins, targets, _ = gessler.edge_arrays()
    within = batch_distances(grid, origins, targets, Norm.L2) <= ball.radius
    inside = {e: within[:, i] for i, e in enumerate(gessler.edge_ids)}
    for a, b in itertools.combinations(gessler.edge_ids, 2):
        if tuple(sorted((a, b))) in pairs:
            assert not np.any(inside[a] & inside[b])
        elif np.any(inside[a] & inside[b]):
            continue
        else:
            # grid too coarse to show an overlap; it can only be thin
            ok, _ = is_compatible_set([a, b], gessler, ball)
            assert ok


def test_triple_present(tangent_triangle):
    ball = Ball(radius=1.9)
    pairs = pairwise_incompatible(tangent_triangle, ball)
    assert pairs == set()
    assert triple_incompatible(tangent_triangle, ball, pairs) == {("e0", "e1", "e2")}


def test_triple_through_common_point():
    net = make_network(
        {"A": (-1, 0), "B": (1, 0), "C": (0, -1), "D": (0, 1), "E": (-1, -1), "F": (1, 1)},
        [("h", "A", "B", 1.0), ("v", "C", "D", 1.0), ("d", "E", "F", 1.0)],
    )
    ball = Ball(radius=0.1)
    assert triple_incompatible(net, ball, pairwise_incompatible(net, ball)) == set()


def test_triples_skip_incompatible_pairs(parallel_far, tangent_triangle):
    ball = Ball(radius=0.5)
    pairs = pairwise_incompatible(tangent_triangle, ball)
    assert len(pairs) == 3
    assert triple_incompatible(tangent_triangle, ball, pairs) == set()


def test_singleton_is_compatible(parallel_far):
    ok, witness = is_compatible_set(["low"], parallel_far, Ball(radius=0.01))
    assert ok
    assert in_stadium(witness, edge_segment(parallel_far, "low"), Ball(radius=0.01))


def test_separated_pair_infeasible(parallel_far):
    ok, witness = is_compatible_set(["low", "high"], parallel_far, Ball(radius=1.0))
    assert not ok
    assert witness is None


def test_compatible_pair_has_witness(parallel_far):
    ball = Ball(radius=2.0)
    ok, witness = is_compatible_set(["low", "high"], parallel_far, ball)
    assert ok
    for edge_id in ("low", "high"):
        assert in_stadium(witness, edge_segment(parallel_far, edge_id), Ball(radius=2.0 + 1e-5))


def test_empty_set_rejected(parallel_far):
    with pytest.raises(ValueError):
        is_compatible_set([], parallel_far, Ball(radius=1.0))


@pytest.mark.parametrize("norm", [Norm.L2, Norm.LINF])
def test_helly_agrees_with_direct_check(random_network, norm):
    net = random_network(8, seed=21)
    ball = Ball(norm=norm, radius=0.8)
    table = build_table(net, ball)
    segments = {e: edge_segment(net, e) for e in net.edge_ids}
    rng = np.random.default_rng(4)
    checked = 0
    for _ in range(40):
        ids = sorted(rng.choice(net.edge_ids, size=4, replace=False))
        eps, _ = epsilon_star([segments[e] for e in ids], ball.radius, norm)
        if abs(eps) < 1e-3:
            continue
        assert helly_compatible(ids, table) == (eps <= TOL_EPS)
        checked += 1
    assert checked > 0


def grid_minimax(net, ids, ball, n=300):
    """min over a dense grid of max_i δ(X, e_i), grid spacing returned alongside"""
    origins, targets, _ = net.edge_arrays()
    index = [net.edge_ids.index(e) for e in ids]
    ends = np.vstack([origins[index], targets[index]])
    low, high = ends.min(axis=0) - ball.radius - 0.01, ends.max(axis=0) + ball.radius + 0.01
    xs = np.linspace(low[0], high[0], n)
    ys = np.linspace(low[1], high[1], n)
    grid = np.array(np.meshgrid(xs, ys, indexing="ij")).reshape(2, -1).T
    value = batch_distances(grid, origins[index], targets[index], ball.norm).max(axis=1).min()
    return float(value), float(max(xs[1] - xs[0], ys[1] - ys[0]))


@pytest.mark.parametrize("norm", [Norm.L2, Norm.L1, Norm.LINF])
@pytest.mark.parametrize("size", [2, 3, 4, 5, 6])
def test_helly_agrees_with_grid_emptiness(random_network, norm, size):
    net = random_network(9, seed=31)
    ball = Ball(norm=norm, radius=1.2)
    table = build_table(net, ball)
    rng = np.random.default_rng(size)
    for _ in range(12):
        ids = sorted(rng.choice(net.edge_ids, size=size, replace=False))
        value, step = grid_minimax(net, ids, ball)
        if helly_compatible(ids, table):
            # the nearest grid node is at most one step away in every norm
            assert value <= ball.radius + TOL_EPS + step
        else:
            assert value > ball.radius - 1e-6


def test_table_round_trip(triangle_net):
    table = build_table(triangle_net, Ball(radius=0.5))
    again = table_from_dict(table.to_dict())
    assert isinstance(again, IncompatibilityTable)
    assert again.pairs == table.pairs
    assert again.triples == table.triples
    assert again.has_pair("DE", "AB")
