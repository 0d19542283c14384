"""
API Client Module
Config-driven facade over the network, solver and export modules
"""

import json
import logging
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple, Union

import pandas as pd
from pydantic import BaseModel, Field

from ..core.benchmarks import BENCHMARKS, load_benchmark
from ..core.compatibility import IncompatibilityTable, build_table
from ..core.coverage import CoverageReport, Placement, evaluate
from ..core.geometry import Ball, Norm
from ..core.ilp_seed import SeedAssignment, SeedConfig, solve_seed_ilp
from ..core.model_export import ConicModel, build_multi, build_psnlclp, build_single, build_seed_ilp
from ..core.network_model import Network, load_network, scale_to_disk
from ..core.placement import BaselineConfig, Problem, RunConfig, Strategy, solve
from ..core.single_device import SolverConfig

logger = logging.getLogger(__name__)


class LeakCoverConfig(BaseModel):
    """Top-level configuration, one section per concern"""
    scale_radius: Optional[float] = Field(default=5.0, gt=0.0, description="Disk radius networks are scaled to (None keeps coordinates)")
    ball: Ball = Field(default_factory=lambda: Ball(norm=Norm.L2, radius=0.5), description="Device coverage ball")
    strategy: Strategy = Field(default=Strategy.HEURISTIC, description="Default placement strategy")
    solver: SolverConfig = Field(default_factory=SolverConfig)
    seed: SeedConfig = Field(default_factory=SeedConfig)
    baseline: BaselineConfig = Field(default_factory=BaselineConfig)
    workers: int = Field(default=1, ge=1, description="Worker processes for compare grids")


class LeakCoverClient:
    """Leak-detection placement client"""

    def __init__(self, config_path: str = None, config_dict: Dict[str, Any] = None):
        """
        Initialize client

        Args:
            config_path: Configuration file path
            config_dict: Configuration dictionary
        """
        if config_path:
            with open(config_path, "r", encoding="utf-8") as f:
                config_data = json.load(f)
        elif config_dict:
            config_data = config_dict
        else:
            default_config_path = Path("config.json")
            if default_config_path.exists():
                try:
                    with open(default_config_path, "r", encoding="utf-8") as f:
                        config_data = json.load(f)
                    logger.info("Loaded configuration from config.json")
                except (OSError, json.JSONDecodeError) as e:
                    logger.warning("Could not load config.json: %s, using defaults", e)
                    config_data = self._get_default_config()
            else:
                config_data = self._get_default_config()

        self.config = LeakCoverConfig(**config_data)

    def _get_default_config(self) -> Dict[str, Any]:
        return LeakCoverConfig().model_dump(mode="json")

    def update_config(self, **sections: Any) -> LeakCoverConfig:
        """
        Replace configuration sections

        Args:
            **sections: Section name to new value (model or dict)

        Returns:
            The new configuration
        """
        data = self.config.model_dump()
        for name, value in sections.items():
            if name not in LeakCoverConfig.model_fields:
                raise KeyError(f"Unknown configuration section: {name}")
            data[name] = value.model_dump() if isinstance(value, BaseModel) else value
        self.config = LeakCoverConfig(**data)
        return self.config

    def load_network(self, source: Union[str, Path]) -> Network:
        """
        Load a network file or a stand-in benchmark by name and scale it

        Args:
            source: JSON file path or benchmark name

        Returns:
            Network scaled to config.scale_radius
        """
        path = Path(source)
        if path.exists():
            net = load_network(path)
        elif str(source) in BENCHMARKS:
            net = load_benchmark(str(source), scale_radius=None)
        else:
            raise FileNotFoundError(f"No network file or benchmark named {source}")
        if self.config.scale_radius:
            net = scale_to_disk(net, self.config.scale_radius)
        return net

    def run_config(
        self,
        problem: Union[Problem, str] = Problem.MNLCLP,
        p: Optional[int] = None,
        gamma: Optional[float] = None,
        ball: Optional[Ball] = None,
    ) -> RunConfig:
        return RunConfig(
            problem=problem,
            p=p,
            gamma=gamma,
            ball=ball or self.config.ball,
            solver=self.config.solver,
            seed=self.config.seed,
            baseline=self.config.baseline,
        )

    def solve(
        self,
        net: Network,
        problem: Union[Problem, str] = Problem.MNLCLP,
        p: Optional[int] = None,
        gamma: Optional[float] = None,
        strategy: Optional[Union[Strategy, str]] = None,
    ) -> Tuple[Placement, CoverageReport]:
        """
        Place devices on a network

        Args:
            net: Network
            problem: mnlclp or psnlclp
            p: Device count (mnlclp)
            gamma: Target covered fraction (psnlclp)
            strategy: Placement strategy (default from config)

        Returns:
            (placement, coverage report)
        """
        cfg = self.run_config(problem, p, gamma)
        return solve(net, cfg, strategy or self.config.strategy)

    def evaluate(self, net: Network, placement: Placement) -> CoverageReport:
        return evaluate(net, placement)

    def compatibility(self, net: Network) -> IncompatibilityTable:
        return build_table(net, self.config.ball)

    def seed(self, net: Network, p: int, table: Optional[IncompatibilityTable] = None) -> SeedAssignment:
        table = table or self.compatibility(net)
        return solve_seed_ilp(net, self.config.ball, p, table, self.config.seed.mode, self.config.seed.node_limit)

    def export(
        self,
        net: Network,
        problem: Union[Problem, str, None] = Problem.MNLCLP,
        p: Optional[int] = None,
        gamma: Optional[float] = None,
        costs: Optional[Sequence[float]] = None,
        helly_triples: bool = False,
        seed_ilp: bool = False,
    ) -> ConicModel:
        """
        Build an exact model for an external solver

        Args:
            net: Network
            problem: mnlclp or psnlclp
            p: Device count; p=1 with mnlclp gives the single-device model
            gamma: Target fraction (psnlclp)
            costs: Per-device set-up costs (psnlclp)
            helly_triples: Emit Helly triple rows in multi-device models
            seed_ilp: Export the edge-assignment seed model instead

        Returns:
            ConicModel
        """
        ball = self.config.ball
        problem = Problem(problem)
        if seed_ilp:
            return build_seed_ilp(net, ball, p or 1, self.compatibility(net))
        if problem == Problem.PSNLCLP:
            if p is not None:
                return build_multi(net, [ball] * p, problem, gamma, costs, helly_triples)
            return build_psnlclp(net, ball, gamma, costs=costs, helly_triples=helly_triples)
        if p is None:
            raise ValueError("mnlclp export requires p")
        if p == 1:
            return build_single(net, ball)
        return build_multi(net, [ball] * p, problem, helly_triples=helly_triples)

    def compare(self, net: Network, ps: Sequence[int], radii: Sequence[float]) -> pd.DataFrame:
        """
        Unrestricted heuristic against node- and edge-restricted baselines
        on every (p, R) cell

        Returns:
            DataFrame sorted by (p, radius) with dev_edges and dev_nodes in percent
        """
        from ..utils.batch import run_grid

        return run_grid(
            net,
            ps,
            radii,
            norm=self.config.ball.norm,
            solver=self.config.solver,
            baseline=self.config.baseline,
            workers=self.config.workers,
        )

    def benchmarks(self) -> List[str]:
        return list(BENCHMARKS)
