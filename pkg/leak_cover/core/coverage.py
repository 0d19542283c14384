"""
Coverage Module
Exact covered weighted length of a placement by per-edge interval union
"""

import logging
from typing import Any, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from .geometry import Ball, Norm, Point, batch_intersections
from .network_model import Edge, Network, total_weighted_length

logger = logging.getLogger(__name__)

Interval = Tuple[float, float]


class CoverageInterval(BaseModel):
    """Sub-range [lo, hi] of one edge covered by one device"""
    model_config = ConfigDict(frozen=True)

    edge_id: str
    lo: float = Field(..., ge=0.0, le=1.0)
    hi: float = Field(..., ge=0.0, le=1.0)
    device_index: int = Field(..., ge=0)

    @model_validator(mode="after")
    def _ordered(self) -> "CoverageInterval":
        if self.lo > self.hi:
            raise ValueError("lo must not exceed hi")
        return self


class Device(BaseModel):
    """Device position with its own coverage ball"""
    model_config = ConfigDict(frozen=True)

    x: float
    y: float
    ball: Ball

    @property
    def position(self) -> Point:
        return Point(self.x, self.y)


class Placement(BaseModel):
    """Device set plus the merged covered intervals of every edge"""
    devices: List[Device] = Field(default_factory=list)
    per_edge_intervals: Dict[str, List[Interval]] = Field(
        default_factory=dict, description="edge id -> disjoint sorted intervals in [0, 1]"
    )


class CoverageReport(BaseModel):
    covered_weighted_length: float = Field(..., description="Σ ω_e · covered length of e")
    total_weighted_length: float = Field(..., description="TotWLength")
    fraction: float = Field(..., ge=0.0, le=1.0 + 1e-9)
    per_edge: Dict[str, float] = Field(default_factory=dict, description="edge id -> covered length")


def device_intervals(
    devices: Sequence[Device], origins: np.ndarray, targets: np.ndarray
) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """
    Intersection parameters of every device with every segment

    Returns:
        lo (k, m), hi (k, m), hit (k, m)
    """
    k, m = len(devices), len(origins)
    lo, hi = np.zeros((k, m)), np.zeros((k, m))
    hit = np.zeros((k, m), dtype=bool)
    if k == 0 or m == 0:
        return lo, hi, hit

    by_norm: Dict[Norm, List[int]] = {}
    for j, device in enumerate(devices):
        by_norm.setdefault(device.ball.norm, []).append(j)
    for norm, rows in by_norm.items():
        rows = np.array(rows)
        points = np.array([[devices[j].x, devices[j].y] for j in rows])
        radii = np.array([devices[j].ball.radius for j in rows])
        lo[rows], hi[rows], hit[rows] = batch_intersections(points, origins, targets, norm, radii)
    return lo, hi, hit


def edge_intervals(net: Network, edge: Edge, devices: Sequence[Device]) -> List[CoverageInterval]:
    """One interval per device whose ball meets the edge, in device order"""
    o, f = net.endpoints(edge)
    lo, hi, hit = device_intervals(devices, o[None, :], f[None, :])
    return [
        CoverageInterval(edge_id=edge.id, lo=float(lo[j, 0]), hi=float(hi[j, 0]), device_index=j)
        for j in range(len(devices))
        if hit[j, 0]
    ]


def merge_intervals(intervals: Sequence[Union[CoverageInterval, Interval]]) -> List[Interval]:
    """Union of closed intervals; touching intervals merge"""
    spans = sorted(
        (iv.lo, iv.hi) if isinstance(iv, CoverageInterval) else (float(iv[0]), float(iv[1]))
        for iv in intervals
    )
    merged: List[Interval] = []
    for lo, hi in spans:
        if merged and lo <= merged[-1][1]:
            if hi > merged[-1][1]:
                merged[-1] = (merged[-1][0], hi)
        else:
            merged.append((lo, hi))
    return merged


def measure(merged: Sequence[Interval]) -> float:
    return float(sum(hi - lo for lo, hi in merged))


def covered_intervals(net: Network, devices: Sequence[Device]) -> Dict[str, List[Interval]]:
    """Merged covered intervals for every edge touched by at least one device"""
    origins, targets, _ = net.edge_arrays()
    lo, hi, hit = device_intervals(devices, origins, targets)
    result = {}
    for i, edge_id in enumerate(net.edge_ids):
        rows = np.flatnonzero(hit[:, i])
        if len(rows):
            result[edge_id] = merge_intervals(list(zip(lo[rows, i], hi[rows, i])))
    return result


def make_placement(net: Network, devices: Sequence[Device]) -> Placement:
    return Placement(devices=list(devices), per_edge_intervals=covered_intervals(net, devices))


def report_from_intervals(net: Network, per_edge_intervals: Dict[str, List[Interval]]) -> CoverageReport:
    total = total_weighted_length(net)
    lengths = net.edge_lengths()
    covered = 0.0
    per_edge = {}
    for i, edge in enumerate(net.edges):
        length = float(lengths[i]) * measure(per_edge_intervals.get(edge.id, []))
        per_edge[edge.id] = length
        covered += edge.weight * length
    fraction = covered / total if total > 0 else 0.0
    return CoverageReport(
        covered_weighted_length=covered,
        total_weighted_length=total,
        fraction=min(fraction, 1.0),
        per_edge=per_edge,
    )


def evaluate(net: Network, placement: Placement) -> CoverageReport:
    """
    Covered weighted length Σ_e ω_e L_e · |∪ intervals of e|, recomputed
    from the device positions

    Args:
        net: Network
        placement: Device placement (its stored intervals are ignored)

    Returns:
        Coverage report
    """
    return report_from_intervals(net, covered_intervals(net, placement.devices))


def _pad_intervals(net: Network, covered: Dict[str, List[Interval]]) -> np.ndarray:
    """(m, q, 2) array of merged intervals, padded with empty [0, 0] spans"""
    widest = max((len(v) for v in covered.values()), default=0)
    padded = np.zeros((len(net.edges), max(widest, 1), 2))
    for i, edge_id in enumerate(net.edge_ids):
        for q, (lo, hi) in enumerate(covered.get(edge_id, [])):
            padded[i, q] = (lo, hi)
    return padded


def marginal_gain(
    points: np.ndarray,
    net: Network,
    ball: Ball,
    covered: Optional[Dict[str, List[Interval]]] = None,
) -> np.ndarray:
    """
    Weighted length each candidate position would add on top of the covered
    intervals, shape (k,)

    Args:
        points: Candidate positions (k, 2)
        net: Network
        ball: Ball of the candidate device
        covered: Merged covered intervals per edge (None for nothing covered)
    """
    origins, targets, weights = net.edge_arrays()
    lo, hi, hit = batch_intersections(points, origins, targets, ball.norm, ball.radius)
    span = np.where(hit, hi - lo, 0.0)
    if covered:
        padded = _pad_intervals(net, covered)
        left = np.maximum(lo[:, :, None], padded[None, :, :, 0])
        right = np.minimum(hi[:, :, None], padded[None, :, :, 1])
        overlap = np.clip(right - left, 0.0, None).sum(axis=2)
        span = np.where(hit, np.maximum(span - overlap, 0.0), 0.0)
    return span @ (weights * net.edge_lengths())


def placement_to_dict(placement: Placement, report: Optional[CoverageReport] = None) -> Dict[str, Any]:
    data: Dict[str, Any] = {
        "devices": [
            {"x": d.x, "y": d.y, "radius": d.ball.radius, "norm": d.ball.norm.value}
            for d in placement.devices
        ]
    }
    if report is not None:
        data["report"] = report.model_dump()
    return data


def placement_from_dict(data: Dict[str, Any]) -> Placement:
    devices = [
        Device(x=d["x"], y=d["y"], ball=Ball(norm=Norm(d.get("norm", "l2")), radius=d["radius"]))
        for d in data.get("devices", [])
    ]
    return Placement(devices=devices)
