"""
Seed clustering tests
"""

import numpy as np
import pytest

from conftest import make_network
from leak_cover.core.compatibility import build_table, compatible_with, edge_segment
from leak_cover.core.coverage import evaluate
from leak_cover.core.geometry import Ball, in_stadium
from leak_cover.core.ilp_seed import SeedMode, seed_to_dict, seed_to_placement, solve_seed_ilp
from leak_cover.core.network_model import total_weighted_length
from leak_cover.core.single_device import SolverConfig


@pytest.fixture
def scattered_net():
    """Three far-apart edges of weighted length 2, 6 and 3"""
    return make_network(
        {"A": (0, 0), "B": (2, 0), "C": (10, 0), "D": (13, 0), "E": (0, 10), "F": (3, 10)},
        [("small", "A", "B", 1.0), ("heavy", "C", "D", 2.0), ("mid", "E", "F", 1.0)],
    )


def best_two_clusters(net, table):
    """Exhaustive optimum of two disjoint compatible clusters over all edge subsets"""
    ids = net.edge_ids
    weights = np.array([e.weight for e in net.edges]) * net.edge_lengths()
    n = len(ids)
    size = 1 << n
    compatible = np.zeros(size, dtype=bool)
    value = np.zeros(size)
    compatible[0] = True
    for mask in range(1, size):
        top = mask.bit_length() - 1
        rest = mask & ~(1 << top)
        value[mask] = value[rest] + weights[top]
        if compatible[rest]:
            members = [ids[k] for k in range(n) if rest >> k & 1]
            compatible[mask] = compatible_with(members, ids[top], table)
    best_within = np.where(compatible, value, 0.0)
    for mask in range(size):
        for k in range(n):
            if mask >> k & 1:
                best_within[mask] = max(best_within[mask], best_within[mask & ~(1 << k)])
    full = size - 1
    return max(value[a] + best_within[full & ~a] for a in range(size) if compatible[a])


def test_heaviest_edge_when_all_incompatible(scattered_net):
    ball = Ball(radius=0.5)
    seed = solve_seed_ilp(scattered_net, ball, 1, build_table(scattered_net, ball))
    assert seed.clusters == [["heavy"]]
    assert seed.ilp_value == pytest.approx(6.0)
    assert seed.optimal


def test_all_edges_assigned_when_p_is_large(triangle_net):
    ball = Ball(radius=0.5)
    seed = solve_seed_ilp(triangle_net, ball, len(triangle_net.edges), build_table(triangle_net, ball))
    assert seed.ilp_value == pytest.approx(total_weighted_length(triangle_net))
    assert sorted(e for c in seed.clusters for e in c) == sorted(triangle_net.edge_ids)


def test_clusters_respect_tables(gessler):
    ball = Ball(radius=0.5)
    table = build_table(gessler, ball)
    seed = solve_seed_ilp(gessler, ball, 3, table)
    assert len(seed.clusters) <= 3
    for cluster in seed.clusters:
        for k, edge_id in enumerate(cluster):
            assert compatible_with(cluster[:k], edge_id, table)


@pytest.mark.parametrize("radius", [0.5, 1.0])
def test_exact_matches_exhaustive(gessler, radius):
    ball = Ball(radius=radius)
    table = build_table(gessler, ball)
    seed = solve_seed_ilp(gessler, ball, 2, table)
    assert seed.optimal
    assert seed.ilp_value == pytest.approx(best_two_clusters(gessler, table))


def test_exact_not_worse_than_greedy(gessler):
    ball = Ball(radius=0.5)
    table = build_table(gessler, ball)
    for p in (1, 2, 4):
        exact = solve_seed_ilp(gessler, ball, p, table, SeedMode.EXACT_BNB)
        greedy = solve_seed_ilp(gessler, ball, p, table, SeedMode.GREEDY)
        assert exact.ilp_value >= greedy.ilp_value - 1e-9


def test_node_limit_falls_back(gessler):
    ball = Ball(radius=0.5)
    table = build_table(gessler, ball)
    seed = solve_seed_ilp(gessler, ball, 2, table, node_limit=1)
    assert not seed.optimal
    assert seed.ilp_value > 0.0


def test_invalid_arguments(line_net, l2_ball):
    table = build_table(line_net, l2_ball)
    with pytest.raises(ValueError):
        solve_seed_ilp(line_net, l2_ball, 0, table)


def test_singleton_device_in_stadium(scattered_net):
    ball = Ball(radius=0.5)
    seed = solve_seed_ilp(scattered_net, ball, 3, build_table(scattered_net, ball))
    placement = seed_to_placement(seed, scattered_net, ball)
    assert len(placement.devices) == 3
    for cluster, device in zip(seed.clusters, placement.devices):
        assert in_stadium(device.position, edge_segment(scattered_net, cluster[0]), Ball(radius=0.5 + 1e-6))


def test_polish_never_loses_coverage(gessler):
    ball = Ball(radius=0.5)
    seed = solve_seed_ilp(gessler, ball, 3, build_table(gessler, ball))
    plain = evaluate(gessler, seed_to_placement(seed, gessler, ball))
    polished = evaluate(gessler, seed_to_placement(seed, gessler, ball, polish=True, config=SolverConfig()))
    assert plain.fraction > 0.0
    assert polished.covered_weighted_length >= plain.covered_weighted_length - 1e-9


def test_seed_dict(scattered_net):
    ball = Ball(radius=0.5)
    data = seed_to_dict(solve_seed_ilp(scattered_net, ball, 2, build_table(scattered_net, ball)))
    assert data["ilp_value"] == pytest.approx(9.0)
    assert len(data["clusters"]) == 2
