"""
Seed ILP Module
Edge-based initial solutions: assign edges to at most p compatible clusters
maximising the whole weighted length of the assigned edges, then turn the
clusters into device positions
"""

import itertools
import logging
from enum import Enum
from typing import Dict, List, Optional, Set, Tuple

import numpy as np
from pydantic import BaseModel, Field

from .compatibility import IncompatibilityTable, is_compatible_set
from .coverage import Device, Placement, covered_intervals, make_placement, marginal_gain
from .geometry import Ball, Point
from .network_model import Network
from .single_device import SolverConfig, pattern_search

logger = logging.getLogger(__name__)


class SeedMode(str, Enum):
    EXACT_BNB = "exact_bnb"
    GREEDY = "greedy"


class SeedConfig(BaseModel):
    """Seed ILP configuration"""
    mode: SeedMode = Field(default=SeedMode.EXACT_BNB, description="exact_bnb or greedy")
    node_limit: int = Field(default=10 ** 7, ge=1, description="Branch-and-bound node budget before greedy fallback")
    polish: bool = Field(default=True, description="Polish seed devices against uncovered weight")


class SeedAssignment(BaseModel):
    clusters: List[List[str]] = Field(default_factory=list, description="Edge ids per device")
    positions: List[Point] = Field(default_factory=list, description="Minimax centre of each cluster")
    ilp_value: float = Field(default=0.0, description="Σ ω_e L_e over assigned edges")
    optimal: bool = Field(default=True, description="False when the node limit was hit")
    nodes: int = Field(default=0, description="Branch-and-bound nodes explored")


class _ClusterSearch:
    """Depth-first branch-and-bound over edges in decreasing ω_e L_e order"""

    def __init__(self, order: List[str], weights: np.ndarray, table: IncompatibilityTable, p: int, node_limit: int):
        self.order = order
        self.weights = weights
        self.p = p
        self.node_limit = node_limit
        m = len(order)
        position = {edge_id: i for i, edge_id in enumerate(order)}
        self.conflict = np.zeros((m, m), dtype=bool)
        for a, b in table.pairs:
            if a in position and b in position:
                self.conflict[position[a], position[b]] = self.conflict[position[b], position[a]] = True
        self.triples: Set[Tuple[int, int, int]] = set()
        for triple in table.triples:
            if all(e in position for e in triple):
                self.triples.add(tuple(sorted(position[e] for e in triple)))
        self.suffix = np.concatenate([np.cumsum(weights[::-1])[::-1], [0.0]])

        self.nodes = 0
        self.exhausted = False
        self.best_value = -1.0
        self.best_clusters: List[List[int]] = []

    def fits(self, cluster: List[int], blocked: np.ndarray, k: int) -> bool:
        if blocked[k]:
            return False
        for a, b in itertools.combinations(cluster, 2):
            if tuple(sorted((a, b, k))) in self.triples:
                return False
        return True

    def bound(self, i: int, value: float, blocked: List[np.ndarray]) -> float:
        if len(blocked) < self.p or i >= len(self.order):
            return value + self.suffix[i]
        reachable = ~np.logical_and.reduce([b[i:] for b in blocked])
        return value + float(self.weights[i:] @ reachable)

    def run(self, incumbent: List[List[int]]) -> None:
        self.best_clusters = [list(c) for c in incumbent]
        self.best_value = float(sum(self.weights[k] for c in incumbent for k in c))
        self._visit(0, 0.0, [], [])

    def _visit(self, i: int, value: float, clusters: List[List[int]], blocked: List[np.ndarray]) -> None:
        if self.exhausted:
            return
        self.nodes += 1
        if self.nodes > self.node_limit:
            self.exhausted = True
            return
        if value > self.best_value + 1e-12:
            self.best_value = value
            self.best_clusters = [list(c) for c in clusters]
        if i == len(self.order) or self.bound(i, value, blocked) <= self.best_value + 1e-12:
            return

        weight = float(self.weights[i])
        for j, cluster in enumerate(clusters):
            if self.fits(cluster, blocked[j], i):
                cluster.append(i)
                saved = blocked[j]
                blocked[j] = saved | self.conflict[i]
                self._visit(i + 1, value + weight, clusters, blocked)
                blocked[j] = saved
                cluster.pop()
        if len(clusters) < self.p:
            clusters.append([i])
            blocked.append(self.conflict[i].copy())
            self._visit(i + 1, value + weight, clusters, blocked)
            clusters.pop()
            blocked.pop()
        self._visit(i + 1, value, clusters, blocked)


def _greedy_clusters(search: _ClusterSearch) -> List[List[int]]:
    """Grow clusters one at a time from the heaviest unassigned edge"""
    assigned: Set[int] = set()
    clusters = []
    for _ in range(search.p):
        cluster: List[int] = []
        blocked = np.zeros(len(search.order), dtype=bool)
        for k in range(len(search.order)):
            if k in assigned or not search.fits(cluster, blocked, k):
                continue
            cluster.append(k)
            blocked |= search.conflict[k]
        if not cluster:
            break
        assigned.update(cluster)
        clusters.append(cluster)
    return clusters


def solve_seed_ilp(
    net: Network,
    ball: Ball,
    p: int,
    table: IncompatibilityTable,
    mode: SeedMode = SeedMode.EXACT_BNB,
    node_limit: int = 10 ** 7,
) -> SeedAssignment:
    """
    Partition a subset of the edges into at most p compatible clusters

    Args:
        net: Network
        ball: Coverage ball (must match the table)
        p: Number of devices
        table: Pair and triple incompatibilities for (net, ball)
        mode: exact_bnb (optimal unless node_limit is hit) or greedy
        node_limit: Branch-and-bound node budget

    Returns:
        SeedAssignment with minimax-centre positions
    """
    if p < 1:
        raise ValueError("p must be at least 1")
    if not net.edges:
        raise ValueError("Seed ILP needs a network with edges")

    lengths = dict(zip(net.edge_ids, net.edge_lengths()))
    weight_of = {e.id: e.weight * float(lengths[e.id]) for e in net.edges}
    order = sorted(net.edge_ids, key=lambda e: (-weight_of[e], e))
    weights = np.array([weight_of[e] for e in order])

    search = _ClusterSearch(order, weights, table, p, node_limit)
    incumbent = _greedy_clusters(search)
    optimal = mode == SeedMode.EXACT_BNB
    if mode == SeedMode.EXACT_BNB:
        search.run(incumbent)
        clusters = search.best_clusters
        if search.exhausted:
            optimal = False
            logger.warning("Seed branch-and-bound hit the node limit (%d); returning the incumbent", node_limit)
        logger.info("Seed branch-and-bound: %d nodes, value %.6g", search.nodes, search.best_value)
    else:
        clusters = incumbent

    edge_clusters = [sorted(order[k] for k in cluster) for cluster in clusters if cluster]
    positions = []
    for cluster in edge_clusters:
        feasible, witness = is_compatible_set(cluster, net, ball)
        if not feasible:
            logger.warning("Cluster %s passes the tables but not the minimax test", cluster)
            witness = _edge_midpoint(net, cluster[0])
        positions.append(witness)

    return SeedAssignment(
        clusters=edge_clusters,
        positions=positions,
        ilp_value=float(sum(weight_of[e] for c in edge_clusters for e in c)),
        optimal=optimal,
        nodes=search.nodes,
    )


def _edge_midpoint(net: Network, edge_id: str) -> Point:
    o, f = net.endpoints(net.edge(edge_id))
    mid = 0.5 * (o + f)
    return Point(float(mid[0]), float(mid[1]))


def polish_devices(
    net: Network,
    devices: List[Device],
    config: Optional[SolverConfig] = None,
    extra_seeds: Optional[np.ndarray] = None,
) -> List[Device]:
    """
    Best-response pass: each device in turn moves to maximise the weight it
    adds on top of the others. Total coverage never decreases.

    Args:
        net: Network
        devices: Current devices
        config: Pattern-search settings
        extra_seeds: Additional starting points offered to the first device
    """
    config = config or SolverConfig()
    devices = list(devices)
    for j, device in enumerate(devices):
        others = devices[:j] + devices[j + 1:]
        covered = covered_intervals(net, others)
        ball = device.ball

        def gain(points: np.ndarray) -> np.ndarray:
            return marginal_gain(points, net, ball, covered)

        seeds = [np.array([[device.x, device.y]])]
        if j == 0 and extra_seeds is not None and len(extra_seeds):
            seeds.append(np.asarray(extra_seeds, dtype=float).reshape(-1, 2))
        points, values = pattern_search(
            gain, np.vstack(seeds), ball.radius / 2.0, config.step_tol * ball.radius, config.max_iterations
        )
        best = int(np.argmax(values))
        if values[best] > gain(np.array([[device.x, device.y]]))[0]:
            devices[j] = Device(x=float(points[best, 0]), y=float(points[best, 1]), ball=ball)
    return devices


def seed_to_placement(
    seed: SeedAssignment,
    net: Network,
    ball: Ball,
    polish: bool = False,
    config: Optional[SolverConfig] = None,
    extra_seeds: Optional[np.ndarray] = None,
) -> Placement:
    """One device per non-empty cluster at its minimax centre, optionally polished"""
    devices = [
        Device(x=pos.x, y=pos.y, ball=ball)
        for cluster, pos in zip(seed.clusters, seed.positions)
        if cluster
    ]
    if polish and devices:
        devices = polish_devices(net, devices, config, extra_seeds)
    return make_placement(net, devices)


def seed_to_dict(seed: SeedAssignment) -> Dict:
    return {
        "clusters": seed.clusters,
        "positions": [[p.x, p.y] for p in seed.positions],
        "ilp_value": seed.ilp_value,
        "optimal": seed.optimal,
        "nodes": seed.nodes,
    }
