"""
Network Model Module
Planar embedded pipeline networks: loading, validation, scaling and queries
"""

import json
import logging
import math
from functools import cached_property
from pathlib import Path
from typing import Any, Dict, List, Tuple, Union

import networkx as nx
import numpy as np
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator

logger = logging.getLogger(__name__)


class NetworkValidationError(ValueError):
    """Raised when a network file or dictionary is not a valid network"""


class Node(BaseModel):
    """Network node embedded in the plane"""
    model_config = ConfigDict(frozen=True)

    id: str
    x: float = Field(..., description="x coordinate (length units)")
    y: float = Field(..., description="y coordinate (length units)")

    @field_validator("x", "y")
    @classmethod
    def _finite(cls, value: float) -> float:
        if not math.isfinite(value):
            raise ValueError("coordinates must be finite")
        return value


class Edge(BaseModel):
    """Pipe segment between two nodes with a non-negative weight"""
    model_config = ConfigDict(frozen=True)

    id: str
    origin: str = Field(..., description="Origin node id (o_e)")
    target: str = Field(..., description="Target node id (f_e)")
    weight: float = Field(default=1.0, ge=0.0, description="Edge weight (diameter, roughness or 1)")


class Network(BaseModel):
    """Immutable embedded weighted graph"""
    model_config = ConfigDict(frozen=True)

    name: str = Field(default="network", description="Instance name")
    nodes: Tuple[Node, ...]
    edges: Tuple[Edge, ...]

    @cached_property
    def node_index(self) -> Dict[str, Node]:
        return {node.id: node for node in self.nodes}

    @property
    def edge_ids(self) -> List[str]:
        return [edge.id for edge in self.edges]

    @cached_property
    def edge_index(self) -> Dict[str, Edge]:
        return {edge.id: edge for edge in self.edges}

    def edge(self, edge_id: str) -> Edge:
        return self.edge_index[edge_id]

    def endpoints(self, edge: Edge) -> Tuple[np.ndarray, np.ndarray]:
        """Return (o_e, f_e) as coordinate arrays"""
        index = self.node_index
        o, f = index[edge.origin], index[edge.target]
        return np.array([o.x, o.y]), np.array([f.x, f.y])

    @cached_property
    def geometry_arrays(self) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        index = self.node_index
        origins = np.array([[index[e.origin].x, index[e.origin].y] for e in self.edges], dtype=float)
        targets = np.array([[index[e.target].x, index[e.target].y] for e in self.edges], dtype=float)
        weights = np.array([e.weight for e in self.edges], dtype=float)
        arrays = (origins.reshape(-1, 2), targets.reshape(-1, 2), weights)
        for array in arrays:
            array.setflags(write=False)
        return arrays

    def edge_arrays(self) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Origins (m,2), targets (m,2) and weights (m,) in edge order (read-only)"""
        return self.geometry_arrays

    def edge_lengths(self) -> np.ndarray:
        origins, targets, _ = self.edge_arrays()
        return np.linalg.norm(targets - origins, axis=1)

    def length(self, edge: Edge) -> float:
        o, f = self.endpoints(edge)
        return float(np.linalg.norm(f - o))

    def point_at(self, edge: Edge, lam: float) -> np.ndarray:
        """point(λ) = o_e + λ (f_e − o_e)"""
        o, f = self.endpoints(edge)
        return o + lam * (f - o)

    def node_array(self) -> np.ndarray:
        return np.array([[n.x, n.y] for n in self.nodes], dtype=float).reshape(-1, 2)

    def diameter(self) -> float:
        """Largest distance between two node positions"""
        points = self.node_array()
        if len(points) < 2:
            return 0.0
        diffs = points[:, None, :] - points[None, :, :]
        return float(np.sqrt((diffs ** 2).sum(axis=2)).max())

    def to_graph(self) -> nx.Graph:
        """networkx view with positions, weights and lengths as attributes"""
        graph = nx.Graph(name=self.name)
        for node in self.nodes:
            graph.add_node(node.id, pos=(node.x, node.y))
        for edge in self.edges:
            graph.add_edge(edge.origin, edge.target, id=edge.id, weight=edge.weight, length=self.length(edge))
        return graph


def network_from_dict(data: Dict[str, Any], name: str = "network") -> Network:
    """
    Build a validated Network from the JSON schema
    {"nodes":[{"id","x","y"}], "edges":[{"id","source","target","weight"}]}
    """
    try:
        raw_nodes = data["nodes"]
        raw_edges = data["edges"]
    except (KeyError, TypeError) as e:
        raise NetworkValidationError(f"Missing section in network data: {e}")

    try:
        nodes = [Node(id=str(n["id"]), x=n["x"], y=n["y"]) for n in raw_nodes]
        edges = [
            Edge(
                id=str(e["id"]),
                origin=str(e.get("source", e.get("origin"))),
                target=str(e["target"]),
                weight=e.get("weight", 1.0),
            )
            for e in raw_edges
        ]
    except (KeyError, TypeError, ValidationError) as e:
        raise NetworkValidationError(f"Invalid network entry: {e}")

    return build_network(nodes, edges, name=data.get("name", name))


def build_network(nodes: List[Node], edges: List[Edge], name: str = "network") -> Network:
    """Validate ids, endpoints and edge lengths and return the Network"""
    index: Dict[str, Node] = {}
    for node in nodes:
        if node.id in index:
            raise NetworkValidationError(f"Duplicate node id: {node.id}")
        index[node.id] = node

    seen_edges = set()
    for edge in edges:
        if edge.id in seen_edges:
            raise NetworkValidationError(f"Duplicate edge id: {edge.id}")
        seen_edges.add(edge.id)
        for endpoint in (edge.origin, edge.target):
            if endpoint not in index:
                raise NetworkValidationError(f"Edge {edge.id} references missing node {endpoint}")
        o, f = index[edge.origin], index[edge.target]
        if math.hypot(f.x - o.x, f.y - o.y) == 0.0:
            raise NetworkValidationError(f"Zero-length edge: {edge.id}")

    network = Network(name=name, nodes=tuple(nodes), edges=tuple(edges))
    if edges and total_weighted_length(network) <= 0.0:
        raise NetworkValidationError("Total weighted length must be positive")
    return network


def load_network(path: Union[str, Path], format: str = "json") -> Network:
    """
    Load a network file

    Args:
        path: File path
        format: Input format (only "json")

    Returns:
        Validated Network
    """
    if format != "json":
        raise NetworkValidationError(f"Unsupported network format: {format}")
    path = Path(path)
    try:
        with open(path, "r", encoding="utf-8") as f:
            data = json.load(f)
    except json.JSONDecodeError as e:
        raise NetworkValidationError(f"Could not parse {path}: {e}")

    network = network_from_dict(data, name=path.stem)
    logger.info("Loaded network %s: |V|=%d, |E|=%d", network.name, len(network.nodes), len(network.edges))
    return network


def network_to_dict(net: Network) -> Dict[str, Any]:
    return {
        "name": net.name,
        "nodes": [{"id": n.id, "x": n.x, "y": n.y} for n in net.nodes],
        "edges": [{"id": e.id, "source": e.origin, "target": e.target, "weight": e.weight} for e in net.edges],
    }


def save_network(net: Network, path: Union[str, Path]) -> None:
    with open(path, "w", encoding="utf-8") as f:
        json.dump(network_to_dict(net), f, indent=2)


def bounding_circle(points: np.ndarray) -> Tuple[np.ndarray, float]:
    """Minimum enclosing circle of a point set (Welzl, randomised order fixed by seed)"""
    pts = [tuple(p) for p in np.asarray(points, dtype=float)]
    rng = np.random.default_rng(0)
    order = rng.permutation(len(pts))
    pts = [pts[i] for i in order]

    def circle_two(a, b):
        center = ((a[0] + b[0]) / 2.0, (a[1] + b[1]) / 2.0)
        return center, math.dist(a, center)

    def circle_three(a, b, c):
        d = 2.0 * (a[0] * (b[1] - c[1]) + b[0] * (c[1] - a[1]) + c[0] * (a[1] - b[1]))
        if abs(d) < 1e-14:
            candidates = [circle_two(a, b), circle_two(a, c), circle_two(b, c)]
            return max(candidates, key=lambda item: item[1])
        ux = ((a[0] ** 2 + a[1] ** 2) * (b[1] - c[1]) + (b[0] ** 2 + b[1] ** 2) * (c[1] - a[1])
              + (c[0] ** 2 + c[1] ** 2) * (a[1] - b[1])) / d
        uy = ((a[0] ** 2 + a[1] ** 2) * (c[0] - b[0]) + (b[0] ** 2 + b[1] ** 2) * (a[0] - c[0])
              + (c[0] ** 2 + c[1] ** 2) * (b[0] - a[0])) / d
        return (ux, uy), math.dist(a, (ux, uy))

    def inside(circle, p):
        return math.dist(circle[0], p) <= circle[1] * (1 + 1e-12) + 1e-12

    circle = (pts[0], 0.0)
    for i, p in enumerate(pts):
        if inside(circle, p):
            continue
        circle = (p, 0.0)
        for j in range(i):
            q = pts[j]
            if inside(circle, q):
                continue
            circle = circle_two(p, q)
            for k in range(j):
                r = pts[k]
                if not inside(circle, r):
                    circle = circle_three(p, q, r)
    return np.array(circle[0]), float(circle[1])


def disk_transform(net: Network, target_radius: float = 5.0) -> Tuple[np.ndarray, float]:
    """
    Translation centre and scale factor used by scale_to_disk

    Returns:
        (bounding-circle centre, scale factor)
    """
    if target_radius <= 0:
        raise ValueError("target_radius must be positive")
    points = net.node_array()
    if len(points) == 0:
        raise NetworkValidationError("Cannot scale an empty network")

    center, _ = bounding_circle(points)
    shifted = points - center
    max_norm = float(np.linalg.norm(shifted, axis=1).max())
    if max_norm == 0.0:
        raise NetworkValidationError("Degenerate network: all nodes coincide")

    return center, target_radius / max_norm


def scale_to_disk(net: Network, target_radius: float = 5.0) -> Network:
    """
    Translate the bounding-circle centre to the origin and scale uniformly so
    the largest node norm equals target_radius. Weights are unchanged.
    """
    center, factor = disk_transform(net, target_radius)
    scaled = (net.node_array() - center) * factor
    nodes = [Node(id=n.id, x=float(p[0]), y=float(p[1])) for n, p in zip(net.nodes, scaled)]
    return Network(name=net.name, nodes=tuple(nodes), edges=net.edges)


def total_weighted_length(net: Network) -> float:
    """TotWLength = Σ_e ω_e L_e"""
    if not net.edges:
        return 0.0
    _, _, weights = net.edge_arrays()
    return float(np.dot(weights, net.edge_lengths()))
