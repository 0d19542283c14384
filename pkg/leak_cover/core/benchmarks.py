"""
Benchmarks Module
Synthetic stand-ins for the six water-distribution benchmark networks, with
the same node and edge counts, generated deterministically
"""

import logging
from pathlib import Path
from typing import Dict, List, Optional

import networkx as nx
import numpy as np
from pydantic import BaseModel, Field
from scipy.spatial import Delaunay

from .network_model import Edge, Network, Node, build_network, load_network, scale_to_disk

logger = logging.getLogger(__name__)

DATA_DIR = Path(__file__).resolve().parent.parent / "data"
PIPE_WEIGHTS = (0.75, 1.0, 1.5, 2.0)


class BenchmarkSpec(BaseModel):
    name: str
    nodes: int = Field(..., ge=3)
    edges: int = Field(..., ge=1)
    seed: int = Field(default=0, description="Generator seed")
    shipped: bool = Field(default=False, description="Read from leak_cover/data instead of generated")


BENCHMARKS: Dict[str, BenchmarkSpec] = {
    spec.name: spec
    for spec in [
        BenchmarkSpec(name="gessler", nodes=12, edges=14, seed=101, shipped=True),
        BenchmarkSpec(name="jilin", nodes=28, edges=34, seed=102),
        BenchmarkSpec(name="richmond", nodes=48, edges=44, seed=103),
        BenchmarkSpec(name="foss", nodes=37, edges=58, seed=104),
        BenchmarkSpec(name="rural", nodes=48, edges=60, seed=105),
        BenchmarkSpec(name="zj", nodes=60, edges=85, seed=106),
    ]
}


def benchmark_names() -> List[str]:
    return list(BENCHMARKS)


def generate_network(name: str, n_nodes: int, n_edges: int, seed: int = 0) -> Network:
    """
    Planar pipe-like network: random points, Delaunay triangulation, minimum
    spanning tree, then the shortest remaining triangulation edges until
    n_edges is reached. With fewer edges than a spanning tree needs, the
    longest tree edges are dropped instead.

    Args:
        name: Network name
        n_nodes: Node count (at least 3)
        n_edges: Edge count
        seed: numpy Generator seed

    Returns:
        Network in the unit square (not scaled)
    """
    rng = np.random.default_rng(seed)
    points = rng.uniform(0.0, 1.0, size=(n_nodes, 2))
    triangulation = Delaunay(points)

    graph = nx.Graph()
    graph.add_nodes_from(range(n_nodes))
    for simplex in triangulation.simplices:
        for a, b in ((0, 1), (1, 2), (0, 2)):
            u, v = int(simplex[a]), int(simplex[b])
            graph.add_edge(u, v, length=float(np.linalg.norm(points[u] - points[v])))
    if n_edges > graph.number_of_edges():
        raise ValueError(f"{name}: at most {graph.number_of_edges()} planar edges on {n_nodes} nodes")

    tree = nx.minimum_spanning_tree(graph, weight="length")

    def by_length(item):
        return item[2]["length"], min(item[0], item[1]), max(item[0], item[1])

    chosen = sorted(tree.edges(data=True), key=by_length)
    if n_edges < len(chosen):
        chosen = chosen[:n_edges]
    else:
        extra = sorted((e for e in graph.edges(data=True) if not tree.has_edge(e[0], e[1])), key=by_length)
        chosen += extra[:n_edges - len(chosen)]

    nodes = [Node(id=f"N{i + 1}", x=float(points[i, 0]), y=float(points[i, 1])) for i in range(n_nodes)]
    edges = [
        Edge(id=f"P{k + 1}", origin=f"N{min(u, v) + 1}", target=f"N{max(u, v) + 1}",
             weight=float(rng.choice(PIPE_WEIGHTS)))
        for k, (u, v, _) in enumerate(chosen)
    ]
    return build_network(nodes, edges, name=name)


def load_benchmark(name: str, scale_radius: Optional[float] = 5.0) -> Network:
    """
    Stand-in benchmark network by name, scaled to a disk of scale_radius

    Args:
        name: One of benchmark_names()
        scale_radius: Target disk radius; None keeps the raw coordinates
    """
    if name not in BENCHMARKS:
        raise KeyError(f"Unknown benchmark {name}; choose from {', '.join(BENCHMARKS)}")
    spec = BENCHMARKS[name]
    if spec.shipped:
        net = load_network(DATA_DIR / f"{name}.json")
    else:
        net = generate_network(spec.name, spec.nodes, spec.edges, spec.seed)
    logger.info("Benchmark %s: |V|=%d, |E|=%d", name, len(net.nodes), len(net.edges))
    return scale_to_disk(net, scale_radius) if scale_radius else net
