"""
Placement Module
Multi-device solvers: the sequential single-device heuristic for the maximal
covering and partial covering problems, seed-then-polish, the device-count
bound and the node-/edge-restricted baselines
"""

import logging
import math
from enum import Enum
from typing import Any, Dict, List, NamedTuple, Optional, Tuple

import numpy as np
from pydantic import BaseModel, Field, model_validator

from .compatibility import build_table
from .coverage import (
    CoverageReport,
    Device,
    Placement,
    covered_intervals,
    evaluate,
    make_placement,
    marginal_gain,
)
from .geometry import Ball, Norm, batch_intersections, norm_values
from .ilp_seed import SeedConfig, seed_to_placement, solve_seed_ilp
from .network_model import Edge, Network, Node, total_weighted_length
from .single_device import SolverConfig, solve_single

logger = logging.getLogger(__name__)

# Pieces shorter than this (in length units) are dropped from the search network
MIN_PIECE_LENGTH = 1e-12


class SolverGuardError(RuntimeError):
    """Raised when a partial-cover iteration stops making progress"""


class Problem(str, Enum):
    MNLCLP = "mnlclp"
    PSNLCLP = "psnlclp"


class Strategy(str, Enum):
    HEURISTIC = "heuristic"
    SEED_POLISH = "seed_polish"
    BASELINE_NODES = "baseline_nodes"
    BASELINE_EDGES = "baseline_edges"


class BaselineMode(str, Enum):
    NODES = "nodes"
    EDGES = "edges"


class BaselineConfig(BaseModel):
    """Restricted-candidate baseline configuration"""
    edge_grid_step: float = Field(default=0.25, gt=0.0, description="Edge discretisation spacing as a fraction of R")
    swap_passes: int = Field(default=3, ge=0, description="Maximum 1-swap improvement passes")


class RunConfig(BaseModel):
    """One solver run"""
    problem: Problem = Field(default=Problem.MNLCLP, description="mnlclp or psnlclp")
    p: Optional[int] = Field(default=None, ge=0, description="Device count (mnlclp); optional device cap (psnlclp)")
    gamma: Optional[float] = Field(default=None, gt=0.0, le=1.0, description="Target covered fraction (psnlclp)")
    ball: Ball = Field(default_factory=lambda: Ball(norm=Norm.L2, radius=0.5))
    solver: SolverConfig = Field(default_factory=SolverConfig)
    seed: SeedConfig = Field(default_factory=SeedConfig)
    baseline: BaselineConfig = Field(default_factory=BaselineConfig)

    @model_validator(mode="after")
    def _problem_parameters(self) -> "RunConfig":
        if self.problem == Problem.MNLCLP and self.p is None:
            raise ValueError("mnlclp requires p")
        if self.problem == Problem.PSNLCLP and self.gamma is None:
            raise ValueError("psnlclp requires gamma")
        return self


class LivePiece(NamedTuple):
    edge_id: str
    a: float
    b: float
    weight: float


class IterationRecord(BaseModel):
    device: int
    gain: float
    covered: float
    live: float


class HeuristicRun(BaseModel):
    placement: Placement
    iterations: List[IterationRecord] = Field(default_factory=list)


class TrimmedNetwork:
    """
    Uncovered pieces of the original edges, in original edge parameters.
    Covering a window of a piece splits it into at most two side pieces.
    """

    def __init__(self, net: Network):
        self.base = net
        self.pieces: List[LivePiece] = [LivePiece(e.id, 0.0, 1.0, e.weight) for e in net.edges]
        self.covered = 0.0
        self._lengths = dict(zip(net.edge_ids, net.edge_lengths()))
        self._untouched = True

    def live_weighted_length(self) -> float:
        return float(sum(p.weight * self._lengths[p.edge_id] * (p.b - p.a) for p in self.pieces))

    def search_network(self) -> Network:
        """Network of the live pieces; the original network before any trimming"""
        if self._untouched:
            return self.base
        nodes, edges = [], []
        for k, piece in enumerate(self.pieces):
            if self._lengths[piece.edge_id] * (piece.b - piece.a) <= MIN_PIECE_LENGTH:
                continue
            start = self.base.point_at(self.base.edge(piece.edge_id), piece.a)
            end = self.base.point_at(self.base.edge(piece.edge_id), piece.b)
            nodes.append(Node(id=f"{k}a", x=float(start[0]), y=float(start[1])))
            nodes.append(Node(id=f"{k}b", x=float(end[0]), y=float(end[1])))
            edges.append(Edge(id=f"{piece.edge_id}#{k}", origin=f"{k}a", target=f"{k}b", weight=piece.weight))
        return Network(name=f"{self.base.name}-live", nodes=tuple(nodes), edges=tuple(edges))

    def cover(self, device: Device) -> float:
        """Remove the window covered by the device from every live piece; returns the new weighted length"""
        if not self.pieces:
            return 0.0
        ids = [p.edge_id for p in self.pieces]
        origins = np.array([self.base.endpoints(self.base.edge(e))[0] for e in ids])
        targets = np.array([self.base.endpoints(self.base.edge(e))[1] for e in ids])
        lo, hi, hit = batch_intersections(
            np.array([[device.x, device.y]]), origins, targets, device.ball.norm, device.ball.radius
        )
        gained = 0.0
        remaining: List[LivePiece] = []
        for k, piece in enumerate(self.pieces):
            l0, l1 = max(piece.a, lo[0, k]), min(piece.b, hi[0, k])
            if not hit[0, k] or l1 <= l0:
                remaining.append(piece)
                continue
            gained += piece.weight * self._lengths[piece.edge_id] * (l1 - l0)
            if l0 > piece.a:
                remaining.append(piece._replace(b=l0))
            if l1 < piece.b:
                remaining.append(piece._replace(a=l1))
        self.pieces = remaining
        self.covered += gained
        self._untouched = False
        return gained


def chord_length(o: np.ndarray, f: np.ndarray, ball: Ball) -> float:
    """Length of the longest piece of the line through o, f that one ball can cover"""
    direction = (f - o) / np.linalg.norm(f - o)
    return 2.0 * ball.radius / float(norm_values(direction, ball.norm))


def _heaviest_prefix(net: Network, gamma: float) -> List[Edge]:
    """Minimal prefix of the edges sorted by decreasing ω_e L_e reaching γ·TotWLength"""
    lengths = dict(zip(net.edge_ids, net.edge_lengths()))
    ranked = sorted(net.edges, key=lambda e: (-e.weight * lengths[e.id], e.id))
    target = gamma * total_weighted_length(net)
    prefix, acc = [], 0.0
    for edge in ranked:
        if acc >= target - 1e-12 * max(1.0, target):
            break
        prefix.append(edge)
        acc += edge.weight * lengths[edge.id]
    return prefix


def p_upper_bound(net: Network, ball: Ball, gamma: float) -> int:
    """
    Σ over the heaviest edges reaching γ of ⌈L_e / chord_e⌉, with chord_e = 2R
    for the Euclidean ball
    """
    if not 0.0 < gamma <= 1.0:
        raise ValueError("gamma must lie in (0, 1]")
    bound = 0
    for edge in _heaviest_prefix(net, gamma):
        o, f = net.endpoints(edge)
        bound += math.ceil(np.linalg.norm(f - o) / chord_length(o, f, ball) - 1e-9)
    return bound


def tiling_cover(net: Network, ball: Ball, gamma: float) -> List[Device]:
    """Cover each edge of the heaviest γ-prefix with ⌈L_e / chord_e⌉ evenly spaced devices"""
    devices = []
    for edge in _heaviest_prefix(net, gamma):
        o, f = net.endpoints(edge)
        count = math.ceil(np.linalg.norm(f - o) / chord_length(o, f, ball) - 1e-9)
        for k in range(count):
            center = o + (k + 0.5) / count * (f - o)
            devices.append(Device(x=float(center[0]), y=float(center[1]), ball=ball))
    return devices


def run_math_heuristic(net: Network, cfg: RunConfig) -> HeuristicRun:
    """
    Place devices one at a time, each solving the single-device problem on
    the still-uncovered pieces

    Args:
        net: Network
        cfg: Run configuration; p bounds the device count for mnlclp, gamma
            sets the target fraction for psnlclp

    Returns:
        Placement plus per-iteration coverage records
    """
    ball = cfg.ball
    total = total_weighted_length(net)
    trimmed = TrimmedNetwork(net)
    devices: List[Device] = []
    iterations: List[IterationRecord] = []

    if cfg.problem == Problem.MNLCLP:
        limit = cfg.p
        target = None
    else:
        bound = p_upper_bound(net, ball, cfg.gamma)
        limit = bound if cfg.p is None else min(bound, cfg.p)
        target = (cfg.gamma - 1e-10) * total

    while len(devices) < limit:
        if target is not None and trimmed.covered >= target:
            break
        solution = solve_single(trimmed.search_network(), ball, cfg.solver)
        if solution.objective <= 1e-12:
            if target is None:
                logger.warning("No uncovered weight within reach after %d devices; stopping early", len(devices))
                break
            raise SolverGuardError(
                f"Partial cover stalled at fraction {trimmed.covered / total:.6f} after {len(devices)} devices"
            )
        device = Device(x=solution.position.x, y=solution.position.y, ball=ball)
        gained = trimmed.cover(device)
        if target is not None and gained < 1e-9:
            raise SolverGuardError(f"Device {len(devices) + 1} covered only {gained:.3g} new weighted length")
        devices.append(device)
        iterations.append(IterationRecord(
            device=len(devices), gain=gained, covered=trimmed.covered, live=trimmed.live_weighted_length()
        ))
        logger.debug("Device %d at (%.6g, %.6g): +%.6g", len(devices), device.x, device.y, gained)

    if target is not None and trimmed.covered < target:
        if limit < bound:
            raise SolverGuardError(
                f"{limit} devices reach fraction {trimmed.covered / total:.6f}, below gamma {cfg.gamma}"
            )
        logger.info("Heuristic reached the device bound (%d) below gamma; using the tiling cover", limit)
        devices = tiling_cover(net, ball, cfg.gamma)
        iterations = []

    logger.info("Math-heuristic placed %d devices", len(devices))
    return HeuristicRun(placement=make_placement(net, devices), iterations=iterations)


def math_heuristic(net: Network, cfg: RunConfig) -> Placement:
    return run_math_heuristic(net, cfg).placement


def baseline_candidates(net: Network, ball: Ball, mode: BaselineMode, step_fraction: float = 0.25) -> np.ndarray:
    """Node positions, or node positions plus every edge sampled at spacing step_fraction·R"""
    nodes = net.node_array()
    if mode == BaselineMode.NODES:
        return nodes
    step = step_fraction * ball.radius
    origins, targets, _ = net.edge_arrays()
    parts = [nodes]
    for o, f in zip(origins, targets):
        count = max(1, math.ceil(np.linalg.norm(f - o) / step))
        lams = np.arange(1, count) / count
        parts.append(o + lams[:, None] * (f - o))
    return np.vstack([part.reshape(-1, 2) for part in parts])


def restricted_baseline(net: Network, cfg: RunConfig, mode: BaselineMode) -> Placement:
    """
    Greedy maximal-coverage selection of p candidates with exact marginal
    gains, followed by 1-swap improvement. Ties go to the lowest candidate index.
    """
    if cfg.problem != Problem.MNLCLP:
        raise ValueError("Restricted baselines solve the maximal covering problem only")
    ball = cfg.ball
    candidates = baseline_candidates(net, ball, BaselineMode(mode), cfg.baseline.edge_grid_step)
    if cfg.p == 0 or len(candidates) == 0 or not net.edges:
        return make_placement(net, [])

    chosen: List[int] = []
    for _ in range(cfg.p):
        covered = covered_intervals(net, [_device(candidates[c], ball) for c in chosen])
        gains = marginal_gain(candidates, net, ball, covered)
        best = int(np.argmax(gains))
        if gains[best] <= 1e-12:
            break
        chosen.append(best)

    for _ in range(cfg.baseline.swap_passes):
        swapped = False
        for slot in range(len(chosen)):
            others = [_device(candidates[c], ball) for i, c in enumerate(chosen) if i != slot]
            gains = marginal_gain(candidates, net, ball, covered_intervals(net, others))
            best = int(np.argmax(gains))
            if gains[best] > gains[chosen[slot]] + 1e-12:
                chosen[slot] = best
                swapped = True
        if not swapped:
            break

    return make_placement(net, [_device(candidates[c], ball) for c in chosen])


def _device(point: np.ndarray, ball: Ball) -> Device:
    return Device(x=float(point[0]), y=float(point[1]), ball=ball)


def seed_polish(net: Network, cfg: RunConfig) -> Placement:
    """Seed ILP clusters at their minimax centres, then best-response polishing"""
    if cfg.problem != Problem.MNLCLP:
        raise ValueError("seed_polish solves the maximal covering problem only")
    if cfg.p == 0 or not net.edges:
        return make_placement(net, [])
    table = build_table(net, cfg.ball)
    seed = solve_seed_ilp(net, cfg.ball, cfg.p, table, cfg.seed.mode, cfg.seed.node_limit)
    single = solve_single(net, cfg.ball, cfg.solver)
    return seed_to_placement(
        seed, net, cfg.ball,
        polish=cfg.seed.polish,
        config=cfg.solver,
        extra_seeds=np.array([single.position]),
    )


def solve(net: Network, cfg: RunConfig, strategy: Strategy = Strategy.HEURISTIC) -> Tuple[Placement, CoverageReport]:
    """Run one strategy and evaluate the result on the full network"""
    strategy = Strategy(strategy)
    if strategy == Strategy.HEURISTIC:
        placement = math_heuristic(net, cfg)
    elif strategy == Strategy.SEED_POLISH:
        placement = seed_polish(net, cfg)
    elif strategy == Strategy.BASELINE_NODES:
        placement = restricted_baseline(net, cfg, BaselineMode.NODES)
    else:
        placement = restricted_baseline(net, cfg, BaselineMode.EDGES)
    report = evaluate(net, placement)
    logger.info("%s: %d devices, covered fraction %.4f", strategy.value, len(placement.devices), report.fraction)
    return placement, report


def deviation(unrestricted: float, restricted: float) -> float:
    """(unrestricted − restricted) / unrestricted, 0 when nothing is covered"""
    if unrestricted <= 0.0:
        return 0.0
    return (unrestricted - restricted) / unrestricted


def summary_row(net: Network, cfg: RunConfig) -> Dict[str, Any]:
    """Unrestricted heuristic against both restricted baselines for one (p, R) cell"""
    _, heuristic = solve(net, cfg, Strategy.HEURISTIC)
    _, edges = solve(net, cfg, Strategy.BASELINE_EDGES)
    _, nodes = solve(net, cfg, Strategy.BASELINE_NODES)
    return {
        "network": net.name,
        "p": cfg.p,
        "radius": cfg.ball.radius,
        "unrestricted": heuristic.covered_weighted_length,
        "edges": edges.covered_weighted_length,
        "nodes": nodes.covered_weighted_length,
        "dev_edges": 100.0 * deviation(heuristic.covered_weighted_length, edges.covered_weighted_length),
        "dev_nodes": 100.0 * deviation(heuristic.covered_weighted_length, nodes.covered_weighted_length),
    }
