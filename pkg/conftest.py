"""
Shared pytest fixtures
"""

from typing import Callable

import numpy as np
import pytest

from leak_cover.core.benchmarks import load_benchmark
from leak_cover.core.geometry import Ball, Norm
from leak_cover.core.network_model import Edge, Network, Node, build_network


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: full benchmark grid runs")


def make_network(nodes, edges, name="test") -> Network:
    """nodes: {id: (x, y)}; edges: [(id, source, target, weight)]"""
    return build_network(
        [Node(id=k, x=float(x), y=float(y)) for k, (x, y) in nodes.items()],
        [Edge(id=e, origin=a, target=b, weight=w) for e, a, b, w in edges],
        name=name,
    )


@pytest.fixture
def line_net() -> Network:
    """One straight edge of length 4 and weight 1"""
    return make_network({"A": (0, 0), "B": (4, 0)}, [("AB", "A", "B", 1.0)], name="line")


@pytest.fixture
def parallel_net() -> Network:
    """Two parallel unit-weight edges of length 2, 0.6 apart"""
    return make_network(
        {"A": (0, 0), "B": (2, 0), "C": (0, 0.6), "D": (2, 0.6)},
        [("AB", "A", "B", 1.0), ("CD", "C", "D", 1.0)],
        name="parallel",
    )


@pytest.fixture
def triangle_net() -> Network:
    """Three edges forming a triangle plus a far pendant edge"""
    return make_network(
        {"A": (0, 0), "B": (2, 0), "C": (1, 1.5), "D": (6, 0), "E": (7, 0)},
        [("AB", "A", "B", 1.0), ("BC", "B", "C", 2.0), ("CA", "C", "A", 1.0), ("DE", "D", "E", 0.5)],
        name="triangle",
    )


@pytest.fixture(scope="session")
def gessler() -> Network:
    return load_benchmark("gessler")


@pytest.fixture
def l2_ball() -> Ball:
    return Ball(norm=Norm.L2, radius=0.5)


@pytest.fixture
def random_network() -> Callable[..., Network]:
    """Factory for random planar networks with m edges in the disk of radius 5"""

    def factory(m: int, seed: int = 0, name: str = "random") -> Network:
        rng = np.random.default_rng(seed)
        nodes, edges = {}, []
        for k in range(m):
            center = rng.uniform(-4.0, 4.0, size=2)
            offset = rng.uniform(-1.5, 1.5, size=2)
            if np.linalg.norm(offset) < 0.1:
                offset = offset + 0.2
            nodes[f"a{k}"] = tuple(center)
            nodes[f"b{k}"] = tuple(center + offset)
            edges.append((f"e{k}", f"a{k}", f"b{k}", float(rng.choice([0.5, 1.0, 2.0]))))
        return make_network(nodes, edges, name=name)

    return factory
