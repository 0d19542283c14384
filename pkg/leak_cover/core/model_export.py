"""
Model Export Module
Mixed-integer conic formulations of the covering problems as structured
models, a deterministic text serialisation and a checker for solutions
returned by external solvers
"""

import itertools
import json
import logging
import math
from typing import Any, Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np
from pydantic import BaseModel, Field

from .compatibility import IncompatibilityTable, pairwise_incompatible, triple_incompatible
from .coverage import CoverageReport, Device, evaluate, make_placement
from .geometry import Ball, Norm, Point, batch_intersections
from .network_model import Network, total_weighted_length
from .placement import Problem, p_upper_bound

logger = logging.getLogger(__name__)

FEASIBILITY_TOL = 1e-6
FORMAT_HEADER = "CONIC_TEXT 1"

# Half-plane normals of the polyhedral balls, as in the geometry module
_POLY_NORMALS = {
    Norm.L1: ((1.0, 1.0), (1.0, -1.0), (-1.0, 1.0), (-1.0, -1.0)),
    Norm.LINF: ((1.0, 0.0), (-1.0, 0.0), (0.0, 1.0), (0.0, -1.0)),
}

Terms = List[Tuple[str, float]]


class ModelExportError(ValueError):
    """Raised for empty models, missing parameters or incomplete solutions"""


class Variable(BaseModel):
    name: str
    kind: str = Field(default="C", description="C (continuous) or B (binary)")
    lb: float = -math.inf
    ub: float = math.inf


class LinearRow(BaseModel):
    """Σ coef·var (sense) rhs"""
    name: str
    terms: Terms
    sense: str = Field(..., description="<=, >= or =")
    rhs: float


class AffineExpr(BaseModel):
    terms: Terms = Field(default_factory=list)
    constant: float = 0.0


class ConeRow(BaseModel):
    """‖(a_k·v + b_k)_k‖₂ ≤ c·v + d"""
    name: str
    components: List[AffineExpr]
    bound: AffineExpr


class Objective(BaseModel):
    sense: str = Field(default="max", description="max or min")
    terms: Terms = Field(default_factory=list)


class ConicModel(BaseModel):
    variables: List[Variable] = Field(default_factory=list)
    objective: Objective = Field(default_factory=Objective)
    linear: List[LinearRow] = Field(default_factory=list)
    cones: List[ConeRow] = Field(default_factory=list)
    metadata: Dict[str, Any] = Field(default_factory=dict)

    def variable_names(self) -> List[str]:
        return [v.name for v in self.variables]

    def binaries(self) -> List[str]:
        return [v.name for v in self.variables if v.kind == "B"]


class SolutionCheck(BaseModel):
    feasible: bool
    violations: List[str] = Field(default_factory=list, description="Names of violated rows and bounds")
    report: CoverageReport
    model_coverage: float = Field(..., description="Covered weighted length implied by the model variables")
    coverage_gap: float = Field(..., description="model_coverage minus the geometric coverage")
    loose_subsegments: List[str] = Field(
        default_factory=list, description="w variables set without a single device covering the subsegment"
    )


class _Builder:
    """Collects variables and rows, rejecting references to undeclared variables"""

    def __init__(self):
        self.variables: Dict[str, Variable] = {}
        self.linear: List[LinearRow] = []
        self.cones: List[ConeRow] = []

    def var(self, name: str, kind: str = "C", lb: float = -math.inf, ub: float = math.inf) -> str:
        if kind == "B":
            lb, ub = 0.0, 1.0
        self.variables[name] = Variable(name=name, kind=kind, lb=lb, ub=ub)
        return name

    def _check(self, terms: Iterable[Tuple[str, float]]) -> Terms:
        merged: Dict[str, float] = {}
        for name, coef in terms:
            if name not in self.variables:
                raise ModelExportError(f"Row references undeclared variable {name}")
            merged[name] = merged.get(name, 0.0) + float(coef)
        return [(name, coef) for name, coef in merged.items() if coef != 0.0]

    def row(self, name: str, terms: Iterable[Tuple[str, float]], sense: str, rhs: float) -> None:
        self.linear.append(LinearRow(name=name, terms=self._check(terms), sense=sense, rhs=float(rhs)))

    def cone(self, name: str, components: List[Tuple[Terms, float]], bound: Tuple[Terms, float]) -> None:
        self.cones.append(ConeRow(
            name=name,
            components=[AffineExpr(terms=self._check(t), constant=float(c)) for t, c in components],
            bound=AffineExpr(terms=self._check(bound[0]), constant=float(bound[1])),
        ))

    def model(self, objective: Objective, metadata: Dict[str, Any]) -> ConicModel:
        objective = Objective(sense=objective.sense, terms=self._check(objective.terms))
        return ConicModel(
            variables=list(self.variables.values()),
            objective=objective,
            linear=self.linear,
            cones=self.cones,
            metadata=metadata,
        )


def big_m(net: Network, radius: float, norm: Norm = Norm.L2) -> float:
    """Δ exceeding every distance a non-touching coverage row has to absorb"""
    factor = math.sqrt(2.0) if norm == Norm.L1 else 1.0
    return factor * (net.diameter() + 2.0 * radius)


def _coverage_rows(
    builder: _Builder,
    name: str,
    x: Tuple[str, str],
    lam: str,
    z: str,
    o: np.ndarray,
    d: np.ndarray,
    ball: Ball,
    delta: float,
) -> None:
    """‖X − o − λd‖ ≤ R + Δ(1 − z): one cone row, or four linear rows for polyhedral balls"""
    if ball.norm == Norm.L2:
        components = [
            ([(x[0], 1.0), (lam, -d[0])], -o[0]),
            ([(x[1], 1.0), (lam, -d[1])], -o[1]),
        ]
        builder.cone(name, components, ([(z, -delta)], ball.radius + delta))
        return
    for t, sigma in enumerate(_POLY_NORMALS[ball.norm], start=1):
        terms = [(x[0], sigma[0]), (x[1], sigma[1]), (lam, -(sigma[0] * d[0] + sigma[1] * d[1])), (z, delta)]
        builder.row(f"{name}_{t}", terms, "<=", ball.radius + delta + sigma[0] * o[0] + sigma[1] * o[1])


def build_single(net: Network, ball: Ball) -> ConicModel:
    """
    Single-device model: binaries z_i, parameters lam_i_0 ≤ lam_i_1 ≤ z_i,
    position X_1, X_2 and one coverage row per (edge, endpoint parameter)
    """
    if not net.edges:
        raise ModelExportError("Cannot export a model for a network without edges")
    origins, targets, weights = net.edge_arrays()
    lengths = net.edge_lengths()
    delta = big_m(net, ball.radius, ball.norm)

    builder = _Builder()
    x = (builder.var("X_1"), builder.var("X_2"))
    objective = Objective(sense="max")
    for i in range(1, len(net.edges) + 1):
        builder.var(f"z_{i}", "B")
        builder.var(f"lam_{i}_0", lb=0.0, ub=1.0)
        builder.var(f"lam_{i}_1", lb=0.0, ub=1.0)
    for i in range(1, len(net.edges) + 1):
        o, d = origins[i - 1], targets[i - 1] - origins[i - 1]
        for s in (0, 1):
            _coverage_rows(builder, f"cov_{i}_{s}", x, f"lam_{i}_{s}", f"z_{i}", o, d, ball, delta)
        builder.row(f"ord_{i}", [(f"lam_{i}_0", 1.0), (f"lam_{i}_1", -1.0)], "<=", 0.0)
        builder.row(f"zero_{i}", [(f"lam_{i}_1", 1.0), (f"z_{i}", -1.0)], "<=", 0.0)
        coef = float(weights[i - 1] * lengths[i - 1])
        objective.terms.extend([(f"lam_{i}_1", coef), (f"lam_{i}_0", -coef)])

    metadata = {
        "model": "single",
        "name": net.name,
        "p": 1,
        "radii": [ball.radius],
        "norms": [ball.norm.value],
        "delta": delta,
        "edge_ids": net.edge_ids,
    }
    model = builder.model(objective, metadata)
    model.metadata["counts"] = _counts(model)
    logger.info("Single-device model: %d variables, %d linear rows, %d cone rows",
                len(model.variables), len(model.linear), len(model.cones))
    return model


def _counts(model: ConicModel) -> Dict[str, int]:
    families: Dict[str, int] = {}
    for v in model.variables:
        family = v.name.split("_")[0]
        families[family] = families.get(family, 0) + 1
    families["linear_rows"] = len(model.linear)
    families["cone_rows"] = len(model.cones)
    families["variables"] = len(model.variables)
    families["binaries"] = len(model.binaries())
    return families


def _tables(net: Network, balls: Sequence[Ball], helly_triples: bool) -> Dict[Tuple[float, str], IncompatibilityTable]:
    tables = {}
    for ball in balls:
        key = (ball.radius, ball.norm.value)
        if key in tables:
            continue
        pairs = pairwise_incompatible(net, ball)
        triples = triple_incompatible(net, ball, pairs) if helly_triples else set()
        tables[key] = IncompatibilityTable(pairs=frozenset(pairs), triples=frozenset(triples),
                                           radius=ball.radius, norm=ball.norm)
    return tables


def build_multi(
    net: Network,
    balls: Sequence[Ball],
    problem: Problem = Problem.MNLCLP,
    gamma: Optional[float] = None,
    costs: Optional[Sequence[float]] = None,
    helly_triples: bool = False,
) -> ConicModel:
    """
    Multi-device model with interval sorting

    Args:
        net: Network
        balls: One ball per device (p = len(balls))
        problem: mnlclp (maximise coverage) or psnlclp (minimise active devices)
        gamma: Target fraction, required for psnlclp
        costs: Optional per-device set-up costs for the psnlclp objective
        helly_triples: Also emit Σ z ≤ 2 rows for incompatible triples

    Returns:
        ConicModel; products λ·ξ and w·(position difference) are linearised
        through the continuous variables g and h
    """
    problem = Problem(problem)
    if not net.edges:
        raise ModelExportError("Cannot export a model for a network without edges")
    if problem == Problem.PSNLCLP and gamma is None:
        raise ModelExportError("psnlclp export requires gamma")
    p = len(balls)
    if p < 1:
        raise ModelExportError("At least one device is required")
    if costs is not None and len(costs) != p:
        raise ModelExportError("One set-up cost per device is required")

    m = len(net.edges)
    origins, targets, weights = net.edge_arrays()
    lengths = net.edge_lengths()
    delta = max(big_m(net, b.radius, b.norm) for b in balls)
    slots = range(1, 2 * p + 1)
    gaps = range(1, 2 * p)
    devices = range(1, p + 1)
    edges = range(1, m + 1)

    builder = _Builder()
    for j in devices:
        builder.var(f"X_{j}_1")
        builder.var(f"X_{j}_2")
    for j, i in itertools.product(devices, edges):
        builder.var(f"z_{j}_{i}", "B")
    for j, i, s in itertools.product(devices, edges, (0, 1)):
        builder.var(f"lam_{j}_{i}_{s}", lb=0.0, ub=1.0)
    for j, i, l, s in itertools.product(devices, edges, slots, (0, 1)):
        builder.var(f"xi_{j}_{i}_{l}_{s}", "B")
    for i, q in itertools.product(edges, gaps):
        builder.var(f"w_{i}_{q}", "B")
    for j, i, l, s in itertools.product(devices, edges, slots, (0, 1)):
        builder.var(f"g_{j}_{i}_{l}_{s}", lb=0.0, ub=1.0)
    for i, q in itertools.product(edges, gaps):
        builder.var(f"h_{i}_{q}", lb=0.0, ub=1.0)
    if problem == Problem.PSNLCLP:
        for j in devices:
            builder.var(f"y_{j}", "B")

    def position(i: int, l: int, sign: float = 1.0) -> Terms:
        return [(f"g_{j}_{i}_{l}_{s}", sign) for j in devices for s in (0, 1)]

    for j, i in itertools.product(devices, edges):
        ball = balls[j - 1]
        o, d = origins[i - 1], targets[i - 1] - origins[i - 1]
        for s in (0, 1):
            _coverage_rows(builder, f"cov_{j}_{i}_{s}", (f"X_{j}_1", f"X_{j}_2"),
                           f"lam_{j}_{i}_{s}", f"z_{j}_{i}", o, d, ball, delta)
        builder.row(f"ord_{j}_{i}", [(f"lam_{j}_{i}_0", 1.0), (f"lam_{j}_{i}_1", -1.0)], "<=", 0.0)
        builder.row(f"zero_{j}_{i}", [(f"lam_{j}_{i}_1", 1.0), (f"z_{j}_{i}", -1.0)], "<=", 0.0)

    for i, l in itertools.product(edges, slots):
        builder.row(f"slot_{i}_{l}", [(f"xi_{j}_{i}_{l}_{s}", 1.0) for j in devices for s in (0, 1)], "=", 1.0)
    for j, i, s in itertools.product(devices, edges, (0, 1)):
        builder.row(f"place_{j}_{i}_{s}", [(f"xi_{j}_{i}_{l}_{s}", 1.0) for l in slots], "=", 1.0)
    for i, q in itertools.product(edges, gaps):
        builder.row(f"sort_{i}_{q}", position(i, q) + position(i, q + 1, -1.0), "<=", 0.0)

    for j, i, l, s in itertools.product(devices, edges, slots, (0, 1)):
        g, xi, lam = f"g_{j}_{i}_{l}_{s}", f"xi_{j}_{i}_{l}_{s}", f"lam_{j}_{i}_{s}"
        builder.row(f"mc1_{j}_{i}_{l}_{s}", [(g, 1.0), (xi, -1.0)], "<=", 0.0)
        builder.row(f"mc2_{j}_{i}_{l}_{s}", [(g, 1.0), (lam, -1.0)], "<=", 0.0)
        builder.row(f"mc3_{j}_{i}_{l}_{s}", [(lam, 1.0), (xi, 1.0), (g, -1.0)], "<=", 1.0)

    for i, q in itertools.product(edges, gaps):
        terms = [(f"w_{i}_{q}", 1.0)]
        for j in devices:
            terms.extend((f"xi_{j}_{i}_{k}_0", -1.0) for k in slots if k <= q)
            terms.extend((f"xi_{j}_{i}_{k}_1", -1.0) for k in slots if k > q)
        builder.row(f"sub_{i}_{q}", terms, "<=", -float(p))
        builder.row(f"h1_{i}_{q}", [(f"h_{i}_{q}", 1.0)] + position(i, q + 1, -1.0) + position(i, q), "<=", 0.0)
        builder.row(f"h2_{i}_{q}", [(f"h_{i}_{q}", 1.0), (f"w_{i}_{q}", -1.0)], "<=", 0.0)

    for i in edges:
        builder.row(f"touch_{i}", [(f"w_{i}_{q}", 1.0) for q in gaps] + [(f"z_{j}_{i}", -2.0) for j in devices],
                    "<=", 0.0)

    symmetric = all(b == balls[0] for b in balls)
    if symmetric:
        for j in range(1, p):
            builder.row(f"sym_{j}", [(f"X_{j}_1", 1.0), (f"X_{j}_2", 1.0),
                                     (f"X_{j + 1}_1", -1.0), (f"X_{j + 1}_2", -1.0)], "<=", 0.0)

    tables = _tables(net, balls, helly_triples)
    index = {edge_id: i for i, edge_id in enumerate(net.edge_ids, start=1)}
    for j in devices:
        table = tables[(balls[j - 1].radius, balls[j - 1].norm.value)]
        for a, b in sorted(table.pairs):
            builder.row(f"inc_{j}_{index[a]}_{index[b]}", [(f"z_{j}_{index[a]}", 1.0), (f"z_{j}_{index[b]}", 1.0)],
                        "<=", 1.0)
        for a, b, c in sorted(table.triples):
            builder.row(f"helly_{j}_{index[a]}_{index[b]}_{index[c]}",
                        [(f"z_{j}_{index[e]}", 1.0) for e in (a, b, c)], "<=", 2.0)

    coverage_terms = [
        (f"h_{i}_{q}", float(weights[i - 1] * lengths[i - 1])) for i, q in itertools.product(edges, gaps)
    ]
    if problem == Problem.MNLCLP:
        objective = Objective(sense="max", terms=coverage_terms)
    else:
        builder.row("gamma", coverage_terms, ">=", gamma * total_weighted_length(net))
        for j, i in itertools.product(devices, edges):
            builder.row(f"act_{j}_{i}", [(f"z_{j}_{i}", 1.0), (f"y_{j}", -1.0)], "<=", 0.0)
        for j in range(2, p + 1):
            builder.row(f"yord_{j}", [(f"y_{j}", 1.0), (f"y_{j - 1}", -1.0)], "<=", 0.0)
        unit = costs if costs is not None else [1.0] * p
        objective = Objective(sense="min", terms=[(f"y_{j}", float(unit[j - 1])) for j in devices])

    metadata = {
        "model": "multi",
        "name": net.name,
        "problem": problem.value,
        "p": p,
        "gamma": gamma,
        "radii": [b.radius for b in balls],
        "norms": [b.norm.value for b in balls],
        "delta": delta,
        "symmetry": symmetric,
        "costs": list(costs) if costs is not None else None,
        "edge_ids": net.edge_ids,
    }
    model = builder.model(objective, metadata)
    model.metadata["counts"] = _counts(model)
    logger.info("%s model with p=%d: %d variables (%d binary), %d linear rows, %d cone rows",
                problem.value, p, len(model.variables), len(model.binaries()), len(model.linear), len(model.cones))
    return model


def build_psnlclp(net: Network, ball: Ball, gamma: float, **kwargs) -> ConicModel:
    """Partial-cover model with p fixed to the device-count bound"""
    p = max(1, p_upper_bound(net, ball, gamma))
    return build_multi(net, [ball] * p, Problem.PSNLCLP, gamma, **kwargs)


def build_seed_ilp(net: Network, ball: Ball, p: int, table: IncompatibilityTable) -> ConicModel:
    """Linear edge-assignment model: max Σ ω_e L_e z_je with Σ_j z_je ≤ 1 and the Helly rows"""
    if not net.edges:
        raise ModelExportError("Cannot export a model for a network without edges")
    if p < 1:
        raise ModelExportError("At least one device is required")
    lengths = net.edge_lengths()
    index = {edge_id: i for i, edge_id in enumerate(net.edge_ids, start=1)}
    builder = _Builder()
    for j, i in itertools.product(range(1, p + 1), index.values()):
        builder.var(f"z_{j}_{i}", "B")
    if p > 1:
        for i in index.values():
            builder.row(f"once_{i}", [(f"z_{j}_{i}", 1.0) for j in range(1, p + 1)], "<=", 1.0)
    for j in range(1, p + 1):
        for a, b in sorted(table.pairs):
            builder.row(f"inc_{j}_{index[a]}_{index[b]}", [(f"z_{j}_{index[a]}", 1.0), (f"z_{j}_{index[b]}", 1.0)],
                        "<=", 1.0)
        for a, b, c in sorted(table.triples):
            builder.row(f"helly_{j}_{index[a]}_{index[b]}_{index[c]}",
                        [(f"z_{j}_{index[e]}", 1.0) for e in (a, b, c)], "<=", 2.0)
    objective = Objective(sense="max", terms=[
        (f"z_{j}_{index[e.id]}", float(e.weight * lengths[index[e.id] - 1]))
        for j in range(1, p + 1) for e in net.edges
    ])
    metadata = {
        "model": "seed_ilp",
        "name": net.name,
        "p": p,
        "radii": [ball.radius],
        "norms": [ball.norm.value],
        "edge_ids": net.edge_ids,
    }
    model = builder.model(objective, metadata)
    model.metadata["counts"] = _counts(model)
    return model


def _fmt(value: float) -> str:
    if value == math.inf:
        return "inf"
    if value == -math.inf:
        return "-inf"
    return format(value, ".17g")


def _terms_text(terms: Terms) -> str:
    return " ".join([str(len(terms))] + [f"{_fmt(c)} {n}" for n, c in terms])


def serialize(model: ConicModel, format: str = "conic_text") -> bytes:
    """Deterministic text form with META, VARS, OBJ, LIN and SOC sections (grammar in docs/format.md)"""
    if format != "conic_text":
        raise ModelExportError(f"Unsupported model format: {format}")
    lines = [FORMAT_HEADER, f"META {len(model.metadata)}"]
    for key in sorted(model.metadata):
        lines.append(f"{key} {json.dumps(model.metadata[key], sort_keys=True, separators=(',', ':'))}")
    lines.append(f"VARS {len(model.variables)}")
    lines.extend(f"{v.name} {v.kind} {_fmt(v.lb)} {_fmt(v.ub)}" for v in model.variables)
    lines.append(f"OBJ {model.objective.sense} {_terms_text(model.objective.terms)}")
    lines.append(f"LIN {len(model.linear)}")
    lines.extend(f"{r.name} {r.sense} {_fmt(r.rhs)} {_terms_text(r.terms)}" for r in model.linear)
    lines.append(f"SOC {len(model.cones)}")
    for cone in model.cones:
        lines.append(f"{cone.name} {len(cone.components)}")
        lines.append(f"bound {_fmt(cone.bound.constant)} {_terms_text(cone.bound.terms)}")
        lines.extend(f"comp {_fmt(c.constant)} {_terms_text(c.terms)}" for c in cone.components)
    lines.append("END")
    return ("\n".join(lines) + "\n").encode("utf-8")


def _parse_terms(tokens: List[str]) -> Terms:
    count = int(tokens[0])
    return [(tokens[2 + 2 * k], float(tokens[1 + 2 * k])) for k in range(count)]


def parse(data: bytes) -> ConicModel:
    """Inverse of serialize"""
    lines = data.decode("utf-8").splitlines()
    if not lines or lines[0] != FORMAT_HEADER:
        raise ModelExportError("Not a conic_text model")
    cursor = 1

    def section(expected: str) -> List[str]:
        nonlocal cursor
        tokens = lines[cursor].split()
        if tokens[0] != expected:
            raise ModelExportError(f"Expected section {expected}, found {tokens[0]}")
        cursor += 1
        return tokens

    metadata = {}
    for _ in range(int(section("META")[1])):
        key, value = lines[cursor].split(" ", 1)
        metadata[key] = json.loads(value)
        cursor += 1
    variables = []
    for _ in range(int(section("VARS")[1])):
        name, kind, lb, ub = lines[cursor].split()
        variables.append(Variable(name=name, kind=kind, lb=float(lb), ub=float(ub)))
        cursor += 1
    tokens = section("OBJ")
    objective = Objective(sense=tokens[1], terms=_parse_terms(tokens[2:]))
    linear = []
    for _ in range(int(section("LIN")[1])):
        tokens = lines[cursor].split()
        linear.append(LinearRow(name=tokens[0], sense=tokens[1], rhs=float(tokens[2]), terms=_parse_terms(tokens[3:])))
        cursor += 1
    cones = []
    for _ in range(int(section("SOC")[1])):
        name, count = lines[cursor].split()
        bound = lines[cursor + 1].split()
        components = [lines[cursor + 2 + k].split() for k in range(int(count))]
        cones.append(ConeRow(
            name=name,
            bound=AffineExpr(constant=float(bound[1]), terms=_parse_terms(bound[2:])),
            components=[AffineExpr(constant=float(c[1]), terms=_parse_terms(c[2:])) for c in components],
        ))
        cursor += 2 + int(count)
    section("END")
    return ConicModel(variables=variables, objective=objective, linear=linear, cones=cones, metadata=metadata)


def _value(terms: Terms, values: Dict[str, float]) -> float:
    return float(sum(coef * values[name] for name, coef in terms))


def _model_balls(model: ConicModel) -> List[Ball]:
    return [Ball(norm=Norm(n), radius=r) for r, n in zip(model.metadata["radii"], model.metadata["norms"])]


def single_assignment(net: Network, ball: Ball, X: Point) -> Dict[str, float]:
    """Variable values of the single-device model for a device at X"""
    origins, targets, _ = net.edge_arrays()
    lo, hi, hit = batch_intersections(np.array([X], dtype=float), origins, targets, ball.norm, ball.radius)
    values = {"X_1": float(X[0]), "X_2": float(X[1])}
    for i in range(1, len(net.edges) + 1):
        touched = bool(hit[0, i - 1])
        values[f"z_{i}"] = 1.0 if touched else 0.0
        values[f"lam_{i}_0"] = float(lo[0, i - 1]) if touched else 0.0
        values[f"lam_{i}_1"] = float(hi[0, i - 1]) if touched else 0.0
    return values


def placement_assignment(model: ConicModel, net: Network, positions: Sequence[Point]) -> Dict[str, float]:
    """
    Variable values of a multi-device model for the given device positions:
    z from the intersection test, λ from the intersection parameters, ξ by
    sorting (value, device, s), w where one touching device spans a subsegment
    of positive length. Missing devices are padded as inactive.
    """
    meta = model.metadata
    if meta.get("model") != "multi":
        raise ModelExportError("placement_assignment needs a multi-device model")
    p = meta["p"]
    balls = _model_balls(model)
    if len(positions) > p:
        raise ModelExportError(f"{len(positions)} devices for a model with p={p}")
    points = [np.asarray(x, dtype=float) for x in positions]
    if meta.get("symmetry"):
        points.sort(key=lambda x: x[0] + x[1])
    active = len(points)
    filler = points[-1] if points else net.node_array().mean(axis=0)
    points.extend(filler.copy() for _ in range(p - active))

    origins, targets, _ = net.edge_arrays()
    values: Dict[str, float] = {}
    lam = np.zeros((p, len(net.edges), 2))
    touched = np.zeros((p, len(net.edges)), dtype=bool)
    for j in range(p):
        values[f"X_{j + 1}_1"], values[f"X_{j + 1}_2"] = float(points[j][0]), float(points[j][1])
        if j >= active:
            continue
        lo, hi, hit = batch_intersections(points[j][None, :], origins, targets, balls[j].norm, balls[j].radius)
        touched[j] = hit[0]
        lam[j, :, 0] = np.where(hit[0], lo[0], 0.0)
        lam[j, :, 1] = np.where(hit[0], hi[0], 0.0)

    for i in range(1, len(net.edges) + 1):
        ranked = sorted((lam[j, i - 1, s], j, s) for j in range(p) for s in (0, 1))
        slot_of = {(j, s): l for l, (_, j, s) in enumerate(ranked, start=1)}
        positions_i = [value for value, _, _ in ranked]
        for j in range(p):
            values[f"z_{j + 1}_{i}"] = 1.0 if touched[j, i - 1] else 0.0
            for s in (0, 1):
                values[f"lam_{j + 1}_{i}_{s}"] = float(lam[j, i - 1, s])
                for l in range(1, 2 * p + 1):
                    xi = 1.0 if slot_of[(j, s)] == l else 0.0
                    values[f"xi_{j + 1}_{i}_{l}_{s}"] = xi
                    values[f"g_{j + 1}_{i}_{l}_{s}"] = xi * float(lam[j, i - 1, s])
        for q in range(1, 2 * p):
            length = positions_i[q] - positions_i[q - 1]
            covered = length > 0.0 and any(
                touched[j, i - 1] and slot_of[(j, 0)] <= q < slot_of[(j, 1)] for j in range(p)
            )
            values[f"w_{i}_{q}"] = 1.0 if covered else 0.0
            values[f"h_{i}_{q}"] = float(length) if covered else 0.0

    if meta.get("problem") == Problem.PSNLCLP.value:
        for j in range(1, p + 1):
            values[f"y_{j}"] = 1.0 if j <= active else 0.0
    return values


def _violations(model: ConicModel, values: Dict[str, float]) -> List[str]:
    violated = []
    for v in model.variables:
        x = values[v.name]
        if x < v.lb - FEASIBILITY_TOL or x > v.ub + FEASIBILITY_TOL:
            violated.append(f"bound:{v.name}")
        elif v.kind == "B" and min(abs(x), abs(x - 1.0)) > FEASIBILITY_TOL:
            violated.append(f"integrality:{v.name}")
    for row in model.linear:
        lhs = _value(row.terms, values)
        if row.sense == "<=" and lhs > row.rhs + FEASIBILITY_TOL:
            violated.append(row.name)
        elif row.sense == ">=" and lhs < row.rhs - FEASIBILITY_TOL:
            violated.append(row.name)
        elif row.sense == "=" and abs(lhs - row.rhs) > FEASIBILITY_TOL:
            violated.append(row.name)
    for cone in model.cones:
        norm = math.sqrt(sum((_value(c.terms, values) + c.constant) ** 2 for c in cone.components))
        if norm > _value(cone.bound.terms, values) + cone.bound.constant + FEASIBILITY_TOL:
            violated.append(cone.name)
    return violated


def verify_solution(model: ConicModel, net: Network, solution: Dict[str, float]) -> SolutionCheck:
    """
    Check an external solution against every row and against the geometric
    coverage of its device positions

    Args:
        model: Model the solution was computed for
        net: Network the model was built from
        solution: Value for every model variable

    Returns:
        SolutionCheck with violated rows, the geometric report and the gap
        between model and geometric coverage
    """
    missing = [name for name in model.variable_names() if name not in solution]
    if missing:
        raise ModelExportError(f"Solution misses {len(missing)} variables, e.g. {missing[0]}")
    if model.metadata.get("edge_ids") != net.edge_ids:
        raise ModelExportError("Model and network edges differ")
    values = {name: float(solution[name]) for name in model.variable_names()}
    violations = _violations(model, values)
    balls = _model_balls(model)
    kind = model.metadata.get("model")

    loose: List[str] = []
    if kind == "single":
        devices = [Device(x=values["X_1"], y=values["X_2"], ball=balls[0])]
        model_coverage = _value(model.objective.terms, values)
    elif kind == "multi":
        p = model.metadata["p"]
        active = [
            j for j in range(1, p + 1)
            if model.metadata.get("problem") != Problem.PSNLCLP.value or values[f"y_{j}"] > 0.5
        ]
        devices = [Device(x=values[f"X_{j}_1"], y=values[f"X_{j}_2"], ball=balls[j - 1]) for j in active]
        origins, _, weights = net.edge_arrays()
        lengths = net.edge_lengths()
        model_coverage = 0.0
        for i in range(1, len(net.edges) + 1):
            for q in range(1, 2 * p):
                model_coverage += float(weights[i - 1] * lengths[i - 1]) * values[f"h_{i}_{q}"]
                if values[f"w_{i}_{q}"] > 0.5 and not _single_device_spans(values, p, i, q):
                    loose.append(f"w_{i}_{q}")
    else:
        raise ModelExportError(f"Cannot verify a {kind} model against geometry")

    report = evaluate(net, make_placement(net, devices))
    gap = model_coverage - report.covered_weighted_length
    if loose:
        logger.warning("%d covered subsegments are not spanned by a single device", len(loose))
    return SolutionCheck(
        feasible=not violations,
        violations=violations,
        report=report,
        model_coverage=model_coverage,
        coverage_gap=gap,
        loose_subsegments=loose,
    )


def _single_device_spans(values: Dict[str, float], p: int, i: int, q: int) -> bool:
    for j in range(1, p + 1):
        if values[f"z_{j}_{i}"] < 0.5:
            continue
        before = sum(values[f"xi_{j}_{i}_{k}_0"] for k in range(1, q + 1))
        after = sum(values[f"xi_{j}_{i}_{k}_1"] for k in range(q + 1, 2 * p + 1))
        if before > 0.5 and after > 0.5:
            return True
    return False
