"""
Coverage evaluation tests
"""

import numpy as np
import pytest

from leak_cover.core.coverage import (
    CoverageInterval,
    Device,
    Placement,
    covered_intervals,
    edge_intervals,
    evaluate,
    make_placement,
    marginal_gain,
    measure,
    merge_intervals,
    placement_from_dict,
    placement_to_dict,
)
from leak_cover.core.geometry import Ball, Norm
from leak_cover.core.network_model import total_weighted_length


def device(x, y, radius=0.5, norm=Norm.L2):
    return Device(x=x, y=y, ball=Ball(norm=norm, radius=radius))


def test_merge_examples():
    merged = merge_intervals([(0.1, 0.5), (0.3, 0.7)])
    assert merged == [(0.1, 0.7)]
    assert measure(merged) == pytest.approx(0.6)
    assert merge_intervals([(0.1, 0.2), (0.2, 0.3)]) == [(0.1, 0.3)]
    assert merge_intervals([]) == []


def test_merge_accepts_coverage_intervals():
    spans = [CoverageInterval(edge_id="e", lo=0.6, hi=0.9, device_index=1),
             CoverageInterval(edge_id="e", lo=0.0, hi=0.2, device_index=0)]
    assert merge_intervals(spans) == [(0.0, 0.2), (0.6, 0.9)]


def test_interval_order_enforced():
    with pytest.raises(ValueError):
        CoverageInterval(edge_id="e", lo=0.7, hi=0.2, device_index=0)


def test_merge_matches_monte_carlo():
    rng = np.random.default_rng(17)
    starts = rng.uniform(0, 1, size=50)
    spans = [(s, min(1.0, s + w)) for s, w in zip(starts, rng.uniform(0, 0.05, size=50))]
    samples = rng.uniform(0, 1, size=1_000_000)
    inside = np.zeros(samples.shape, dtype=bool)
    for lo, hi in spans:
        inside |= (samples >= lo) & (samples <= hi)
    assert measure(merge_intervals(spans)) == pytest.approx(inside.mean(), abs=1e-3)


def test_midpoint_interval(line_net):
    edge = line_net.edges[0]
    (interval,) = edge_intervals(line_net, edge, [device(2.0, 0.0, radius=0.5)])
    assert interval.lo == pytest.approx(0.5 - 0.5 / 4)
    assert interval.hi == pytest.approx(0.5 + 0.5 / 4)


def test_tangent_device(line_net):
    (interval,) = edge_intervals(line_net, line_net.edges[0], [device(2.0, 0.5, radius=0.5)])
    assert interval.lo == pytest.approx(interval.hi)
    assert interval.lo == pytest.approx(0.5)


def test_four_devices_give_four_raw_intervals(line_net):
    devices = [device(0.6, 0.0), device(1.2, 0.2), device(3.2, 0.0), device(3.6, -0.1)]
    raw = edge_intervals(line_net, line_net.edges[0], devices)
    assert len(raw) == 4
    assert [iv.device_index for iv in raw] == [0, 1, 2, 3]
    assert len(merge_intervals(raw)) == 2


def test_empty_placement(gessler):
    report = evaluate(gessler, Placement())
    assert report.covered_weighted_length == 0.0
    assert report.fraction == 0.0
    assert report.total_weighted_length == pytest.approx(total_weighted_length(gessler))


def test_huge_ball_covers_everything(gessler):
    report = evaluate(gessler, make_placement(gessler, [device(0.0, 0.0, radius=20.0)]))
    assert report.fraction == pytest.approx(1.0)


def test_coverage_is_monotone(gessler):
    rng = np.random.default_rng(2)
    devices = [device(*rng.uniform(-5, 5, size=2)) for _ in range(6)]
    values = [evaluate(gessler, Placement(devices=devices[:k])).covered_weighted_length for k in range(7)]
    assert all(b >= a - 1e-12 for a, b in zip(values, values[1:]))


@pytest.mark.parametrize("norm", [Norm.L2, Norm.L1, Norm.LINF])
def test_coverage_is_subadditive(gessler, norm):
    rng = np.random.default_rng(17)
    for _ in range(10):
        first = [device(*rng.uniform(-4, 4, size=2), radius=1.0, norm=norm) for _ in range(3)]
        second = [device(*rng.uniform(-4, 4, size=2), radius=1.0, norm=norm) for _ in range(3)]
        both = evaluate(gessler, Placement(devices=first + second)).covered_weighted_length
        apart = (evaluate(gessler, Placement(devices=first)).covered_weighted_length
                 + evaluate(gessler, Placement(devices=second)).covered_weighted_length)
        assert both <= apart + 1e-9
    # overlapping copies count once
    same = [device(0.0, 0.0, norm=norm)]
    once = evaluate(gessler, Placement(devices=same)).covered_weighted_length
    assert evaluate(gessler, Placement(devices=same * 2)).covered_weighted_length == pytest.approx(once)


def test_evaluate_ignores_stored_intervals(line_net):
    stale = Placement(devices=[device(2.0, 0.0)], per_edge_intervals={"AB": [(0.0, 1.0)]})
    assert evaluate(line_net, stale).covered_weighted_length == pytest.approx(1.0)


@pytest.mark.parametrize("norm", [Norm.L2, Norm.L1, Norm.LINF])
def test_evaluate_matches_line_sampling(gessler, norm):
    rng = np.random.default_rng(9)
    devices = [device(*rng.uniform(-4, 4, size=2), norm=norm) for _ in range(5)]
    report = evaluate(gessler, Placement(devices=devices))

    order = {Norm.L1: 1, Norm.L2: 2, Norm.LINF: np.inf}[norm]
    origins, targets, weights = gessler.edge_arrays()
    centers = np.array([[d.x, d.y] for d in devices])
    t = (np.arange(100_000) + 0.5) / 100_000
    sampled = 0.0
    for o, f, w in zip(origins, targets, weights):
        pts = o + t[:, None] * (f - o)
        dist = np.linalg.norm(pts[:, None, :] - centers[None, :, :], ord=order, axis=2)
        sampled += w * np.linalg.norm(f - o) * (dist <= 0.5).any(axis=1).mean()
    assert report.covered_weighted_length == pytest.approx(sampled, rel=1e-3, abs=1e-4)


def test_marginal_gain_matches_evaluate(gessler):
    ball = Ball(radius=0.5)
    rng = np.random.default_rng(5)
    existing = [device(*rng.uniform(-4, 4, size=2)) for _ in range(3)]
    base = evaluate(gessler, Placement(devices=existing)).covered_weighted_length
    candidates = rng.uniform(-4, 4, size=(20, 2))
    gains = marginal_gain(candidates, gessler, ball, covered_intervals(gessler, existing))
    for point, gain in zip(candidates, gains):
        after = evaluate(gessler, Placement(devices=existing + [device(*point)])).covered_weighted_length
        assert gain == pytest.approx(after - base, abs=1e-9)


def test_placement_dict_round_trip(line_net):
    placement = make_placement(line_net, [device(1.0, 0.0, norm=Norm.LINF)])
    data = placement_to_dict(placement, evaluate(line_net, placement))
    assert data["report"]["covered_weighted_length"] == pytest.approx(1.0)
    again = placement_from_dict(data)
    assert again.devices == placement.devices
