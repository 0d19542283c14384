"""
Single Device Module
Place one device to maximise covered weighted length: multistart compass
search over the closed-form objective, plus a grid oracle for verification
"""

import itertools
import logging
from typing import Callable, Dict, List, Tuple

import numpy as np
from pydantic import BaseModel, Field

from .coverage import marginal_gain
from .geometry import (
    Ball,
    Point,
    Segment,
    batch_intersections,
    closest_points,
    norm_values,
    segment_segment_distance,
)
from .network_model import Network, bounding_circle

logger = logging.getLogger(__name__)

# Compass directions: the four axes and the four diagonals
_COMPASS = np.array(
    [[1.0, 0.0], [-1.0, 0.0], [0.0, 1.0], [0.0, -1.0],
     [1.0, 1.0], [1.0, -1.0], [-1.0, 1.0], [-1.0, -1.0]]
)
DIRECTIONS = _COMPASS / np.linalg.norm(_COMPASS, axis=1, keepdims=True)

IMPROVEMENT_TOL = 1e-13
CHUNK = 20000


class SolverConfig(BaseModel):
    """Single-device search configuration"""
    random_seeds: int = Field(default=200, ge=0, description="Uniform random seeds drawn in the network disk")
    rng_seed: int = Field(default=0, description="Seed for the random multistart points")
    step_tol: float = Field(default=1e-6, gt=0.0, description="Final pattern step, relative to R")
    max_iterations: int = Field(default=5000, ge=1, description="Pattern-search iteration cap")
    polish_top_k: int = Field(default=32, ge=1, description="Seeds refined down to step_tol after the coarse phase")
    oracle_top_k: int = Field(default=10, ge=1, description="Grid cells polished by the oracle")


class SingleSolution(BaseModel):
    position: Point
    objective: float = Field(..., ge=0.0)
    touched_edges: List[str] = Field(default_factory=list, description="Edges met by the ball (z_e = 1)")
    per_edge_lambdas: Dict[str, Tuple[float, float]] = Field(default_factory=dict)


def objective_batch(points: np.ndarray, net: Network, ball: Ball) -> np.ndarray:
    """Covered weighted length for each candidate position, shape (k,)"""
    points = np.asarray(points, dtype=float).reshape(-1, 2)
    if not net.edges:
        return np.zeros(len(points))
    values = [marginal_gain(points[i:i + CHUNK], net, ball) for i in range(0, len(points), CHUNK)]
    return np.concatenate(values) if values else np.zeros(0)


def objective_at(X: Point, net: Network, ball: Ball) -> float:
    """Σ_e ω_e L_e (λ¹_e − λ⁰_e) with the intersection parameters taken at X"""
    return float(objective_batch(np.asarray(X, dtype=float)[None, :], net, ball)[0])


def pattern_search(
    objective: Callable[[np.ndarray], np.ndarray],
    seeds: np.ndarray,
    step0: float,
    step_tol: float,
    max_iterations: int = 5000,
) -> Tuple[np.ndarray, np.ndarray]:
    """
    Maximise a batched objective from every seed at once by compass search

    Args:
        objective: Maps (k, 2) points to (k,) values
        seeds: Starting points (k, 2)
        step0: Initial step length
        step_tol: Stop once a seed's step falls below this
        max_iterations: Iteration cap

    Returns:
        (final points (k, 2), final values (k,))
    """
    points = np.array(seeds, dtype=float).reshape(-1, 2)
    values = objective(points)
    steps = np.full(len(points), float(step0))

    for _ in range(max_iterations):
        active = np.flatnonzero(steps >= step_tol)
        if len(active) == 0:
            break
        trial = points[active, None, :] + steps[active, None, None] * DIRECTIONS[None, :, :]
        trial_values = objective(trial.reshape(-1, 2)).reshape(len(active), len(DIRECTIONS))
        best = trial_values.argmax(axis=1)
        best_values = trial_values[np.arange(len(active)), best]
        improved = best_values > values[active] + IMPROVEMENT_TOL
        moved = active[improved]
        points[moved] = trial[improved, best[improved]]
        values[moved] = best_values[improved]
        steps[active[~improved]] *= 0.5
    return points, values


def pick_best(points: np.ndarray, values: np.ndarray) -> int:
    """Index of the best value, ties broken by lexicographic (x, y)"""
    top = values.max()
    tied = np.flatnonzero(values >= top - 1e-12)
    order = np.lexsort((points[tied, 1], points[tied, 0]))
    return int(tied[order[0]])


def solution_at(X: Point, net: Network, ball: Ball) -> SingleSolution:
    """SingleSolution with touched edges and λ ranges recomputed at X"""
    X = Point(float(X[0]), float(X[1]))
    origins, targets, weights = net.edge_arrays()
    if not net.edges:
        return SingleSolution(position=X, objective=0.0)
    lo, hi, hit = batch_intersections(np.array([X]), origins, targets, ball.norm, ball.radius)
    touched, lambdas = [], {}
    for i, edge_id in enumerate(net.edge_ids):
        if hit[0, i]:
            touched.append(edge_id)
            lambdas[edge_id] = (float(lo[0, i]), float(hi[0, i]))
    objective = float(np.where(hit[0], hi[0] - lo[0], 0.0) @ (weights * net.edge_lengths()))
    return SingleSolution(position=X, objective=objective, touched_edges=touched, per_edge_lambdas=lambdas)


def pair_witnesses(net: Network, ball: Ball) -> np.ndarray:
    """Midpoints of the closest points of every edge pair whose stadiums meet"""
    origins, targets, _ = net.edge_arrays()
    segments = [Segment(Point(*o), Point(*f)) for o, f in zip(origins, targets)]
    low, high = np.minimum(origins, targets), np.maximum(origins, targets)
    # per-axis box gaps bound the segment distance from below in every norm
    gaps = np.maximum(0.0, np.maximum(low[:, None, :] - high[None, :, :], low[None, :, :] - high[:, None, :]))
    near = norm_values(gaps, ball.norm) <= 2.0 * ball.radius
    witnesses = []
    for i, j in itertools.combinations(range(len(segments)), 2):
        if not near[i, j]:
            continue
        s1, s2 = segments[i], segments[j]
        if segment_segment_distance(s1, s2, ball.norm) <= 2.0 * ball.radius:
            x, x_prime = closest_points(s1, s2)
            witnesses.append(0.5 * (x + x_prime))
    return np.array(witnesses).reshape(-1, 2)


def seed_points(net: Network, ball: Ball, config: SolverConfig) -> np.ndarray:
    """Nodes, edge midpoints, pair witnesses and uniform random points in the network disk"""
    origins, targets, _ = net.edge_arrays()
    parts = [net.node_array(), 0.5 * (origins + targets), pair_witnesses(net, ball)]
    if config.random_seeds and len(net.nodes):
        center, radius = bounding_circle(net.node_array())
        rng = np.random.default_rng(config.rng_seed)
        r = (radius + ball.radius) * np.sqrt(rng.uniform(size=config.random_seeds))
        theta = rng.uniform(0.0, 2.0 * np.pi, size=config.random_seeds)
        parts.append(center + np.column_stack([r * np.cos(theta), r * np.sin(theta)]))
    seeds = np.vstack([p.reshape(-1, 2) for p in parts])
    return np.unique(seeds, axis=0)


def solve_single(net: Network, ball: Ball, config: SolverConfig = None) -> SingleSolution:
    """
    Best single-device position by multistart compass search

    Every seed is refined with steps halving from R/2 down to R/8; the best
    polish_top_k seeds continue down to step_tol·R.
    """
    config = config or SolverConfig()
    if not net.edges:
        origin = net.node_array()[0] if len(net.nodes) else np.zeros(2)
        return SingleSolution(position=Point(float(origin[0]), float(origin[1])), objective=0.0)

    def objective(points: np.ndarray) -> np.ndarray:
        return objective_batch(points, net, ball)

    seeds = seed_points(net, ball, config)
    coarse_tol = ball.radius / 8.0
    points, values = pattern_search(objective, seeds, ball.radius / 2.0, coarse_tol, config.max_iterations)

    order = np.lexsort((points[:, 1], points[:, 0], -values))[:config.polish_top_k]
    points, values = pattern_search(
        objective, points[order], coarse_tol, config.step_tol * ball.radius, config.max_iterations
    )
    best = pick_best(points, values)
    solution = solution_at(points[best], net, ball)
    logger.debug("Single device: %d seeds, objective %.6g at (%.6g, %.6g)",
                 len(seeds), solution.objective, solution.position.x, solution.position.y)
    return solution


def oracle_single(net: Network, ball: Ball, grid_n: int = 500, config: SolverConfig = None) -> SingleSolution:
    """Exhaustive grid over the node bounding box expanded by R, best cells polished"""
    if grid_n < 10:
        raise ValueError("grid_n must be at least 10")
    config = config or SolverConfig()
    nodes = net.node_array()
    if not net.edges or len(nodes) == 0:
        origin = nodes[0] if len(nodes) else np.zeros(2)
        return SingleSolution(position=Point(float(origin[0]), float(origin[1])), objective=0.0)

    low = nodes.min(axis=0) - ball.radius
    high = nodes.max(axis=0) + ball.radius
    xs = np.linspace(low[0], high[0], grid_n)
    ys = np.linspace(low[1], high[1], grid_n)
    grid = np.array(np.meshgrid(xs, ys, indexing="ij")).reshape(2, -1).T
    values = objective_batch(grid, net, ball)

    top = np.lexsort((grid[:, 1], grid[:, 0], -values))[:config.oracle_top_k]
    step0 = float(max(high - low) / (grid_n - 1))
    points, polished = pattern_search(
        lambda p: objective_batch(p, net, ball),
        grid[top],
        step0,
        config.step_tol * ball.radius,
        config.max_iterations,
    )
    best = pick_best(points, polished)
    return solution_at(points[best], net, ball)
