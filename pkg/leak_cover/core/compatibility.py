"""
Compatibility Module
Incompatible edge pairs and triples: the Helly structure deciding which edge
sets a single device can touch at once
"""

import itertools
import logging
from typing import Any, Dict, FrozenSet, Iterable, List, Optional, Sequence, Set, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from .geometry import (
    TOL_EPS,
    Ball,
    Norm,
    Point,
    Segment,
    batch_distances,
    closest_points,
    epsilon_star,
    segment_segment_distance,
)
from .network_model import Network

logger = logging.getLogger(__name__)

Pair = Tuple[str, str]
Triple = Tuple[str, str, str]


class IncompatibilityTable(BaseModel):
    """Pairs and triples of edges whose stadiums have no common point"""
    model_config = ConfigDict(frozen=True)

    pairs: FrozenSet[Pair] = Field(default_factory=frozenset, description="Pairwise-incompatible edge pairs")
    triples: FrozenSet[Triple] = Field(
        default_factory=frozenset, description="Incompatible triples whose sub-pairs are all compatible"
    )
    radius: float = Field(..., gt=0.0, description="Coverage radius the table was built for")
    norm: Norm = Field(default=Norm.L2, description="Ball norm the table was built for")

    def has_pair(self, a: str, b: str) -> bool:
        return canonical(a, b) in self.pairs

    def has_triple(self, a: str, b: str, c: str) -> bool:
        return canonical(a, b, c) in self.triples

    def to_dict(self) -> Dict[str, Any]:
        return {
            "radius": self.radius,
            "norm": self.norm.value,
            "pairs": [list(p) for p in sorted(self.pairs)],
            "triples": [list(t) for t in sorted(self.triples)],
        }


def canonical(*edge_ids: str) -> Tuple[str, ...]:
    return tuple(sorted(edge_ids))


def edge_segment(net: Network, edge_id: str) -> Segment:
    o, f = net.endpoints(net.edge(edge_id))
    return Segment(Point(float(o[0]), float(o[1])), Point(float(f[0]), float(f[1])))


def pairwise_incompatible(net: Network, ball: Ball) -> Set[Pair]:
    """
    Pairs (e, e') whose stadiums are disjoint, i.e. δ(e, e') > 2R.
    The comparison carries the same tol_eps slack as the ε* test, so a pair
    and the ε* of its two segments never disagree.
    """
    segments = {e.id: edge_segment(net, e.id) for e in net.edges}
    threshold = 2.0 * (ball.radius + TOL_EPS)
    pairs = set()
    for a, b in itertools.combinations(net.edge_ids, 2):
        if segment_segment_distance(segments[a], segments[b], ball.norm) > threshold:
            pairs.add(canonical(a, b))
    logger.debug("Pairwise-incompatible edges: %d", len(pairs))
    return pairs


def _witness_matrix(net: Network, ball: Ball, compatible_pairs: Iterable[Pair]) -> np.ndarray:
    """
    Stadium membership of cheap witness points (k, |E|): edge midpoints,
    node positions and the midpoint of each compatible pair's closest points
    """
    origins, targets, _ = net.edge_arrays()
    index = {edge_id: i for i, edge_id in enumerate(net.edge_ids)}
    points = [0.5 * (origins + targets), net.node_array()]
    extra = []
    for a, b in compatible_pairs:
        s1 = Segment(Point(*origins[index[a]]), Point(*targets[index[a]]))
        s2 = Segment(Point(*origins[index[b]]), Point(*targets[index[b]]))
        x, x_prime = closest_points(s1, s2)
        extra.append(0.5 * (x + x_prime))
    if extra:
        points.append(np.array(extra))
    witnesses = np.vstack(points)
    return batch_distances(witnesses, origins, targets, ball.norm) <= ball.radius


def triple_incompatible(net: Network, ball: Ball, pairs: Set[Pair]) -> Set[Triple]:
    """
    Triples of pairwise-compatible edges with ε* > tol_eps.
    A triple sharing a witness point with all three stadiums is skipped
    without solving the minimax program.
    """
    edge_ids = net.edge_ids
    compatible = [
        canonical(a, b) for a, b in itertools.combinations(edge_ids, 2) if canonical(a, b) not in pairs
    ]
    if not compatible:
        return set()

    membership = _witness_matrix(net, ball, compatible)
    index = {edge_id: i for i, edge_id in enumerate(edge_ids)}
    segments = {edge_id: edge_segment(net, edge_id) for edge_id in edge_ids}

    triples = set()
    examined = solved = 0
    for a, b, c in itertools.combinations(edge_ids, 3):
        if canonical(a, b) in pairs or canonical(a, c) in pairs or canonical(b, c) in pairs:
            continue
        examined += 1
        shared = membership[:, index[a]] & membership[:, index[b]] & membership[:, index[c]]
        if shared.any():
            continue
        solved += 1
        eps, _ = epsilon_star([segments[a], segments[b], segments[c]], ball.radius, ball.norm)
        if eps > TOL_EPS:
            triples.add(canonical(a, b, c))
    logger.debug("Triples examined: %d, minimax programs solved: %d, incompatible: %d",
                 examined, solved, len(triples))
    return triples


def build_table(net: Network, ball: Ball) -> IncompatibilityTable:
    """Pair and triple tables for (net, ball)"""
    pairs = pairwise_incompatible(net, ball)
    triples = triple_incompatible(net, ball, pairs)
    logger.info("Incompatibility table: %d pairs, %d triples (R=%g, %s)",
                len(pairs), len(triples), ball.radius, ball.norm.value)
    return IncompatibilityTable(pairs=frozenset(pairs), triples=frozenset(triples),
                                radius=ball.radius, norm=ball.norm)


def is_compatible_set(edge_ids: Iterable[str], net: Network, ball: Ball) -> Tuple[bool, Optional[Point]]:
    """
    Decide whether the stadiums of the given edges share a point

    Args:
        edge_ids: Non-empty set of edge ids
        net: Network holding the edges
        ball: Coverage ball

    Returns:
        (feasible, witness) with the minimax centre as witness when feasible
    """
    ids = sorted(set(edge_ids))
    if not ids:
        raise ValueError("is_compatible_set needs at least one edge")
    segments = [edge_segment(net, edge_id) for edge_id in ids]
    if len(segments) == 1:
        a, b = segments[0]
        return True, Point(0.5 * (a.x + b.x), 0.5 * (a.y + b.y))
    eps, center = epsilon_star(segments, ball.radius, ball.norm)
    if eps <= TOL_EPS:
        return True, center
    return False, None


def helly_compatible(edge_ids: Sequence[str], table: IncompatibilityTable) -> bool:
    """Compatibility predicted from the tables: no sub-pair and no sub-triple listed"""
    ids = sorted(set(edge_ids))
    for a, b in itertools.combinations(ids, 2):
        if (a, b) in table.pairs:
            return False
    for a, b, c in itertools.combinations(ids, 3):
        if (a, b, c) in table.triples:
            return False
    return True


def compatible_with(cluster: Sequence[str], edge_id: str, table: IncompatibilityTable) -> bool:
    """True when adding edge_id to an already compatible cluster keeps it compatible"""
    for a in cluster:
        if table.has_pair(a, edge_id):
            return False
    for a, b in itertools.combinations(cluster, 2):
        if table.has_triple(a, b, edge_id):
            return False
    return True


def table_from_dict(data: Dict[str, Any]) -> IncompatibilityTable:
    return IncompatibilityTable(
        pairs=frozenset(canonical(*p) for p in data.get("pairs", [])),
        triples=frozenset(canonical(*t) for t in data.get("triples", [])),
        radius=data["radius"],
        norm=Norm(data.get("norm", "l2")),
    )
