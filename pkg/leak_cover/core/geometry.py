"""
Geometry Module
Planar primitives for segments and norm balls: distances, ball/segment
intersection parameters, stadium membership and the minimax value ε*
"""

import logging
from enum import Enum
from typing import List, NamedTuple, Optional, Sequence, Tuple, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field
from scipy.optimize import linprog, minimize

logger = logging.getLogger(__name__)

# Tolerances shared by the intersection and stadium tests
DISC_TOL = 1e-12
CLIP_TOL = 1e-12
# ε* threshold used by every compatibility decision
TOL_EPS = 1e-6


class GeometryError(ValueError):
    """Raised for degenerate or empty geometric input"""


class Norm(str, Enum):
    L1 = "l1"
    L2 = "l2"
    LINF = "linf"


class Ball(BaseModel):
    """Coverage area of a device: a norm ball of radius R"""
    model_config = ConfigDict(frozen=True)

    norm: Norm = Field(default=Norm.L2, description="Norm inducing the ball: l1, l2 or linf")
    radius: float = Field(..., gt=0.0, description="Coverage radius R")


class Point(NamedTuple):
    x: float
    y: float


class Segment(NamedTuple):
    a: Point
    b: Point


PointLike = Union[Point, Sequence[float], np.ndarray]

# Half-plane normals n with n·(p − c) ≤ R describing the polyhedral balls
_POLY_NORMALS = {
    Norm.L1: np.array([[1.0, 1.0], [1.0, -1.0], [-1.0, 1.0], [-1.0, -1.0]]),
    Norm.LINF: np.array([[1.0, 0.0], [-1.0, 0.0], [0.0, 1.0], [0.0, -1.0]]),
}


def _xy(p: PointLike) -> np.ndarray:
    return np.asarray(p, dtype=float).reshape(2)


def _segment_arrays(s: Segment, allow_degenerate: bool = False) -> Tuple[np.ndarray, np.ndarray]:
    a, b = _xy(s[0]), _xy(s[1])
    if not allow_degenerate and np.all(a == b):
        raise GeometryError("Degenerate segment")
    return a, b


def norm_values(vectors: np.ndarray, norm: Norm) -> np.ndarray:
    """Norm of vectors along the last axis"""
    vectors = np.asarray(vectors, dtype=float)
    if norm == Norm.L1:
        return np.abs(vectors).sum(axis=-1)
    if norm == Norm.LINF:
        return np.abs(vectors).max(axis=-1)
    return np.sqrt((vectors ** 2).sum(axis=-1))


def point_segment_distance(q: PointLike, s: Segment) -> Tuple[float, float]:
    """
    Euclidean distance from q to the segment and the clamped projection parameter

    Returns:
        (distance, μ̂) with μ̂ = min{max{0, μ}, 1}
    """
    a, b = _segment_arrays(s)
    q = _xy(q)
    d = b - a
    mu = float(np.dot(q - a, d) / np.dot(d, d))
    mu_hat = min(max(0.0, mu), 1.0)
    return float(np.linalg.norm(q - (a + mu_hat * d))), mu_hat


def batch_distances(points: np.ndarray, origins: np.ndarray, targets: np.ndarray, norm: Norm) -> np.ndarray:
    """
    Distances from k points to m segments in the given norm, shape (k, m).
    Degenerate segments are treated as points. The polyhedral cases are
    piecewise linear in the segment parameter, so the minimum sits at an
    endpoint or at a breakpoint of the norm.
    """
    points = np.asarray(points, dtype=float).reshape(-1, 2)
    origins = np.asarray(origins, dtype=float).reshape(-1, 2)
    targets = np.asarray(targets, dtype=float).reshape(-1, 2)
    d = targets - origins
    w = origins[None, :, :] - points[:, None, :]

    if norm == Norm.L2:
        dd = (d ** 2).sum(axis=1)
        safe = np.where(dd > 0.0, dd, 1.0)
        mu = np.where(dd > 0.0, -(w * d[None, :, :]).sum(axis=2) / safe, 0.0)
        mu = np.clip(mu, 0.0, 1.0)
        return norm_values(w + mu[:, :, None] * d[None, :, :], norm)

    def crossing(numerator: np.ndarray, denominator: np.ndarray) -> np.ndarray:
        nonzero = denominator != 0.0
        safe = np.where(nonzero, denominator, 1.0)
        return np.where(nonzero[None, :], numerator / safe[None, :], 0.0)

    candidates = [np.zeros(w.shape[:2]), np.ones(w.shape[:2])]
    candidates.append(crossing(-w[:, :, 0], d[:, 0]))
    candidates.append(crossing(-w[:, :, 1], d[:, 1]))
    if norm == Norm.LINF:
        for sign in (1.0, -1.0):
            candidates.append(crossing(sign * w[:, :, 1] - w[:, :, 0], d[:, 0] - sign * d[:, 1]))
    best = None
    for lam in candidates:
        lam = np.clip(lam, 0.0, 1.0)
        value = norm_values(w + lam[:, :, None] * d[None, :, :], norm)
        best = value if best is None else np.minimum(best, value)
    return best


def point_segment_norm_distance(q: PointLike, s: Segment, norm: Norm = Norm.L2) -> float:
    """min over x in s of ‖q − x‖ in the given norm"""
    a, b = _segment_arrays(s, allow_degenerate=True)
    return float(batch_distances(_xy(q)[None, :], a[None, :], b[None, :], norm)[0, 0])


def segments_cross(s1: Segment, s2: Segment) -> bool:
    """True when the supporting lines meet at parameters μ0, μ0' both in [0, 1]"""
    o1, f1 = _segment_arrays(s1)
    o2, f2 = _segment_arrays(s2)
    d1, d2 = f1 - o1, f2 - o2
    cross = d1[0] * d2[1] - d1[1] * d2[0]
    scale = np.linalg.norm(d1) * np.linalg.norm(d2)
    if abs(cross) <= 1e-14 * scale:
        return False
    diff = o2 - o1
    mu = (diff[0] * d2[1] - diff[1] * d2[0]) / cross
    mu_prime = (diff[0] * d1[1] - diff[1] * d1[0]) / cross
    return 0.0 <= mu <= 1.0 and 0.0 <= mu_prime <= 1.0


def segment_segment_distance(s1: Segment, s2: Segment, norm: Norm = Norm.L2) -> float:
    """
    δ(s1, s2): 0 when the segments cross, otherwise the smallest of the four
    endpoint-to-segment distances (the minimum of a norm of an affine map over
    the parameter square is attained on its boundary)
    """
    o1, f1 = _segment_arrays(s1)
    o2, f2 = _segment_arrays(s2)
    if segments_cross(s1, s2):
        return 0.0
    return min(
        point_segment_norm_distance(o2, s1, norm),
        point_segment_norm_distance(f2, s1, norm),
        point_segment_norm_distance(o1, s2, norm),
        point_segment_norm_distance(f1, s2, norm),
    )


def closest_points(s1: Segment, s2: Segment) -> Tuple[np.ndarray, np.ndarray]:
    """Euclidean closest pair (x in s1, x' in s2)"""
    o1, f1 = _segment_arrays(s1)
    o2, f2 = _segment_arrays(s2)
    d1, d2 = f1 - o1, f2 - o2
    if segments_cross(s1, s2):
        cross = d1[0] * d2[1] - d1[1] * d2[0]
        diff = o2 - o1
        mu = (diff[0] * d2[1] - diff[1] * d2[0]) / cross
        point = o1 + mu * d1
        return point, point
    options = []
    for q, seg, q_first in ((o2, s1, False), (f2, s1, False), (o1, s2, True), (f1, s2, True)):
        dist, mu = point_segment_distance(q, seg)
        a, b = _segment_arrays(seg)
        foot = a + mu * (b - a)
        options.append((dist, (q, foot) if q_first else (foot, q)))
    return min(options, key=lambda item: item[0])[1]


def batch_intersections(
    points: np.ndarray,
    origins: np.ndarray,
    targets: np.ndarray,
    norm: Norm,
    radius: Union[float, np.ndarray],
) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """
    Intersection parameters of k balls with m segments

    Args:
        points: Ball centres (k, 2)
        origins: Segment origins (m, 2)
        targets: Segment targets (m, 2)
        norm: Ball norm
        radius: Scalar radius or per-centre radii (k,)

    Returns:
        lo (k, m), hi (k, m), hit mask (k, m); lo/hi are 0 where hit is False
    """
    points = np.asarray(points, dtype=float).reshape(-1, 2)
    origins = np.asarray(origins, dtype=float).reshape(-1, 2)
    targets = np.asarray(targets, dtype=float).reshape(-1, 2)
    k, m = len(points), len(origins)
    r = np.broadcast_to(np.asarray(radius, dtype=float).reshape(-1, 1), (k, 1)) if k else np.zeros((0, 1))

    d = targets - origins
    w = origins[None, :, :] - points[:, None, :]

    if norm == Norm.L2:
        lengths = np.linalg.norm(d, axis=1)
        u = d / lengths[:, None]
        b = (w * u[None, :, :]).sum(axis=2)
        c = (w ** 2).sum(axis=2) - r ** 2
        disc = b ** 2 - c
        root = np.sqrt(np.maximum(disc, 0.0))
        t0 = (-b - root) / lengths[None, :]
        t1 = (-b + root) / lengths[None, :]
        hit = (disc >= -DISC_TOL) & (t1 >= 0.0) & (t0 <= 1.0)
        lo = np.clip(t0, 0.0, 1.0)
        hi = np.clip(t1, 0.0, 1.0)
    else:
        lo = np.zeros((k, m))
        hi = np.ones((k, m))
        feasible = np.ones((k, m), dtype=bool)
        for normal in _POLY_NORMALS[norm]:
            a = d @ normal
            rhs = r - w @ normal
            positive = a > 1e-15
            negative = a < -1e-15
            safe = np.where(positive | negative, a, 1.0)
            bound = rhs / safe[None, :]
            hi = np.where(positive[None, :], np.minimum(hi, bound), hi)
            lo = np.where(negative[None, :], np.maximum(lo, bound), lo)
            flat = ~(positive | negative)
            feasible &= ~(flat[None, :] & (rhs < -CLIP_TOL))
        hit = feasible & (lo <= hi + CLIP_TOL)
        hi = np.maximum(hi, lo)
        lo = np.clip(lo, 0.0, 1.0)
        hi = np.clip(hi, 0.0, 1.0)

    lo = np.where(hit, lo, 0.0)
    hi = np.where(hit, hi, 0.0)
    return lo, hi, hit


def ball_segment_intersection(center: PointLike, ball: Ball, s: Segment) -> Optional[Tuple[float, float]]:
    """
    Parameters 0 ≤ λ⁰ ≤ λ¹ ≤ 1 of the sub-segment s ∩ B_R(center), or None.
    λ⁰ = λ¹ is returned for tangency.
    """
    a, b = _segment_arrays(s)
    lo, hi, hit = batch_intersections(_xy(center)[None, :], a[None, :], b[None, :], ball.norm, ball.radius)
    if not hit[0, 0]:
        return None
    return float(lo[0, 0]), float(hi[0, 0])


def in_stadium(q: PointLike, s: Segment, ball: Ball) -> bool:
    """True iff q lies in s ⊕ B_R(0), distance measured in the ball's norm"""
    distance = point_segment_norm_distance(q, s, ball.norm)
    return distance <= ball.radius * (1.0 + 1e-12) + 1e-12


def minimax_value(center: PointLike, segments: Sequence[Segment], norm: Norm = Norm.L2) -> float:
    """max_i δ(center, e_i) in the given norm"""
    segs = [_segment_arrays(s, allow_degenerate=True) for s in segments]
    origins = np.array([a for a, _ in segs])
    targets = np.array([b for _, b in segs])
    return float(batch_distances(_xy(center)[None, :], origins, targets, norm).max())


def _candidate_centres(segs: List[Tuple[np.ndarray, np.ndarray]]) -> List[np.ndarray]:
    candidates = [0.5 * (a + b) for a, b in segs]
    candidates.extend(a for a, _ in segs)
    candidates.extend(b for _, b in segs)
    for i in range(len(segs)):
        for j in range(i + 1, len(segs)):
            s1 = Segment(Point(*segs[i][0]), Point(*segs[i][1]))
            s2 = Segment(Point(*segs[j][0]), Point(*segs[j][1]))
            if np.all(segs[i][0] == segs[i][1]) or np.all(segs[j][0] == segs[j][1]):
                continue
            x, x_prime = closest_points(s1, s2)
            candidates.append(0.5 * (x + x_prime))
    return candidates


def _minimax_l2(segs: List[Tuple[np.ndarray, np.ndarray]], start: np.ndarray) -> np.ndarray:
    """SLSQP on min s s.t. s ≥ ‖X − o_i − λ_i d_i‖², λ_i ∈ [0, 1]"""
    n = len(segs)
    origins = np.array([a for a, _ in segs])
    dirs = np.array([b - a for a, b in segs])

    def residuals(v):
        lam = v[2:2 + n]
        return v[None, :2] - origins - lam[:, None] * dirs

    def constraint(v):
        return v[-1] - (residuals(v) ** 2).sum(axis=1)

    def constraint_jac(v):
        res = residuals(v)
        jac = np.zeros((n, n + 3))
        jac[:, 0] = -2.0 * res[:, 0]
        jac[:, 1] = -2.0 * res[:, 1]
        jac[np.arange(n), 2 + np.arange(n)] = 2.0 * (res * dirs).sum(axis=1)
        jac[:, -1] = 1.0
        return jac

    lam0 = np.empty(n)
    for i, (a, b) in enumerate(segs):
        d = b - a
        dd = float(np.dot(d, d))
        lam0[i] = 0.0 if dd == 0.0 else min(max(float(np.dot(start - a, d)) / dd, 0.0), 1.0)
    v0 = np.concatenate([start, lam0, [0.0]])
    v0[-1] = float((residuals(v0) ** 2).sum(axis=1).max())

    objective = np.zeros(n + 3)
    objective[-1] = 1.0
    result = minimize(
        lambda v: v[-1],
        v0,
        jac=lambda v: objective,
        method="SLSQP",
        bounds=[(None, None), (None, None)] + [(0.0, 1.0)] * n + [(0.0, None)],
        constraints=[{"type": "ineq", "fun": constraint, "jac": constraint_jac}],
        options={"ftol": 1e-15, "maxiter": 500},
    )
    return result.x[:2]


def _minimax_polyhedral(segs: List[Tuple[np.ndarray, np.ndarray]], norm: Norm) -> np.ndarray:
    """Linear program min t s.t. σ·(X − o_i − λ_i d_i) ≤ t over the ball's sign patterns"""
    n = len(segs)
    if norm == Norm.L1:
        patterns = _POLY_NORMALS[Norm.L1]
    else:
        patterns = _POLY_NORMALS[Norm.LINF]
    rows, rhs = [], []
    for i, (a, b) in enumerate(segs):
        d = b - a
        for sigma in patterns:
            row = np.zeros(n + 3)
            row[0:2] = sigma
            row[2 + i] = -float(np.dot(sigma, d))
            row[-1] = -1.0
            rows.append(row)
            rhs.append(float(np.dot(sigma, a)))
    c = np.zeros(n + 3)
    c[-1] = 1.0
    result = linprog(
        c,
        A_ub=np.array(rows),
        b_ub=np.array(rhs),
        bounds=[(None, None), (None, None)] + [(0.0, 1.0)] * n + [(0.0, None)],
        method="highs",
    )
    if not result.success:
        raise GeometryError(f"Minimax linear program failed: {result.message}")
    return result.x[:2]


def minimax_center(
    segments: Sequence[Segment],
    norm: Norm = Norm.L2,
    restarts: int = 2,
    rng_seed: int = 0,
) -> Tuple[float, Point]:
    """
    Centre minimising the largest distance to the given segments

    Returns:
        (min_X max_i δ(X, e_i), minimising X)
    """
    if not segments:
        raise GeometryError("Empty segment list")
    segs = [_segment_arrays(s, allow_degenerate=True) for s in segments]

    candidates = _candidate_centres(segs)
    if norm == Norm.L2:
        points = np.array([p for seg in segs for p in seg])
        low, high = points.min(axis=0), points.max(axis=0)
        rng = np.random.default_rng(rng_seed)
        starts = [np.mean([0.5 * (a + b) for a, b in segs], axis=0)]
        starts.extend(rng.uniform(low, high) for _ in range(restarts))
        for start in starts:
            candidates.append(_minimax_l2(segs, np.asarray(start, dtype=float)))
    else:
        candidates.append(_minimax_polyhedral(segs, norm))

    centres = np.array(candidates)
    origins = np.array([a for a, _ in segs])
    targets = np.array([b for _, b in segs])
    values = batch_distances(centres, origins, targets, norm).max(axis=1)
    best = int(np.argmin(values))
    return float(values[best]), Point(float(centres[best, 0]), float(centres[best, 1]))


def epsilon_star(segments: Sequence[Segment], R: float, norm: Norm = Norm.L2) -> Tuple[float, Point]:
    """
    ε* = min_X max_i δ(X, e_i) − R and a minimising X.
    ε* ≤ 0 exactly when the stadiums e_i ⊕ B_R(0) share a point.
    """
    value, center = minimax_center(segments, norm)
    return value - R, center
