"""
Batch grid utility
Runs the unrestricted heuristic and both restricted baselines over a (p, R)
grid and writes the deviation report
"""

import json
import logging
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple

import pandas as pd

from ..core.geometry import Ball, Norm
from ..core.network_model import Network
from ..core.placement import BaselineConfig, Problem, RunConfig, summary_row
from ..core.single_device import SolverConfig

logger = logging.getLogger(__name__)

REPORT_COLUMNS = ["network", "p", "radius", "unrestricted", "edges", "nodes", "dev_edges", "dev_nodes"]


def grid_configs(
    ps: Sequence[int],
    radii: Sequence[float],
    norm: Norm = Norm.L2,
    solver: Optional[SolverConfig] = None,
    baseline: Optional[BaselineConfig] = None,
) -> List[RunConfig]:
    """One mnlclp RunConfig per (p, R) cell, in (p, R) order"""
    solver = solver or SolverConfig()
    baseline = baseline or BaselineConfig()
    return [
        RunConfig(problem=Problem.MNLCLP, p=p, ball=Ball(norm=norm, radius=r), solver=solver, baseline=baseline)
        for p in sorted(ps)
        for r in sorted(radii)
    ]


def _run_cell(job: Tuple[Network, RunConfig]) -> Dict[str, Any]:
    net, cfg = job
    return summary_row(net, cfg)


def run_grid(
    net: Network,
    ps: Sequence[int],
    radii: Sequence[float],
    norm: Norm = Norm.L2,
    solver: Optional[SolverConfig] = None,
    baseline: Optional[BaselineConfig] = None,
    workers: int = 1,
) -> pd.DataFrame:
    """
    Deviation report over the (p, R) grid

    Args:
        net: Network
        ps: Device counts
        radii: Ball radii
        norm: Ball norm
        solver: Single-device search settings
        baseline: Restricted-baseline settings
        workers: Worker processes (1 runs in-process)

    Returns:
        DataFrame with REPORT_COLUMNS, one row per cell, sorted by (p, radius)
    """
    jobs = [(net, cfg) for cfg in grid_configs(ps, radii, norm, solver, baseline)]
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as executor:
            rows = list(executor.map(_run_cell, jobs))
    else:
        rows = [_run_cell(job) for job in jobs]
    logger.info("Compared %d grid cells on %s", len(rows), net.name)
    frame = pd.DataFrame(rows, columns=REPORT_COLUMNS)
    return frame.sort_values(["p", "radius"], kind="stable").reset_index(drop=True)


def save_report(frame: pd.DataFrame, output_dir: Path, stem: str = "compare") -> Tuple[Path, Path]:
    """Write the report as CSV and JSON; returns both paths"""
    output_dir = Path(output_dir)
    output_dir.mkdir(parents=True, exist_ok=True)
    csv_path = output_dir / f"{stem}.csv"
    json_path = output_dir / f"{stem}.json"
    frame.to_csv(csv_path, index=False, encoding="utf-8")
    with open(json_path, "w", encoding="utf-8") as f:
        json.dump(frame.to_dict(orient="records"), f, indent=2, sort_keys=True)
    return csv_path, json_path
