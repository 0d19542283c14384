"""
Command-line utility
Scale networks, build compatibility tables, seed, solve, evaluate, export
models, compare against restricted baselines and plot
"""

import argparse
import json
import logging
import sys
import time
from pathlib import Path
from typing import Any, Dict, List, Optional

import networkx as nx
from pydantic import BaseModel, Field, ValidationError

from .. import __version__
from ..api.client import LeakCoverClient
from ..core.compatibility import build_table
from ..core.coverage import placement_from_dict, placement_to_dict
from ..core.geometry import Ball, Norm
from ..core.ilp_seed import SeedMode, seed_to_dict
from ..core.model_export import ModelExportError, parse, serialize, verify_solution
from ..core.network_model import NetworkValidationError, save_network, total_weighted_length
from ..core.placement import Problem, SolverGuardError, Strategy
from ..core.single_device import SolverConfig
from .batch import save_report
from .plot import plot_placement

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_GUARD = 3
EXIT_IO = 4


class UsageError(ValueError):
    """Flag combination the parser cannot express"""


BASELINES = (Strategy.BASELINE_NODES, Strategy.BASELINE_EDGES)


def _check_device_count(args: argparse.Namespace) -> None:
    p = getattr(args, "p", None)
    if p is not None and p < 1:
        raise UsageError(f"--p must be at least 1, got {p}")


class RunManifest(BaseModel):
    """Everything needed to re-run a command, written beside its outputs"""
    command: str
    flags: Dict[str, Any] = Field(default_factory=dict)
    rng_seed: int = 0
    version: str
    wall_time: float = Field(..., description="Seconds")
    outputs: List[str] = Field(default_factory=list)


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--network", required=True, help="Network JSON file or stand-in benchmark name")
    common.add_argument("--scale-radius", type=float, default=5.0, help="Scale the network into a disk of this radius (default: 5)")
    common.add_argument("--norm", choices=[n.value for n in Norm], default=None, help="Ball norm (default: l2)")
    common.add_argument("--radius", type=float, default=None, help="Ball radius R (default: 0.5)")
    common.add_argument("--rng-seed", type=int, default=0, help="Seed for random multistart points")
    common.add_argument("--out", default="output", help="Output directory (default: output)")
    common.add_argument("-c", "--config", help="Configuration file path (JSON format)")
    common.add_argument("-v", "--verbose", action="count", default=0, help="-v for info, -vv for debug logging")

    parser = argparse.ArgumentParser(
        prog="leak-cover",
        description="Leak-detection device placement on pipeline networks",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="""
Usage examples:
  # Five devices of radius 0.5 on the shipped gessler stand-in
  leak-cover solve --network gessler --problem mnlclp --p 5 --radius 0.5 --svg

  # Fewest devices covering 75% of the weighted length
  leak-cover solve --network net.json --problem psnlclp --gamma 0.75

  # Deviation report; positive values mean the unrestricted placement covers more
  leak-cover compare --network gessler --ps 2 5 8 --radii 0.1 0.25 0.5
        """,
    )
    sub = parser.add_subparsers(dest="command", required=True)

    sub.add_parser("scale", parents=[common], help="Write the scaled network and print its summary")
    sub.add_parser("compat", parents=[common], help="Pair and triple incompatibility table")

    seed = sub.add_parser("seed", parents=[common], help="Seed edge-assignment clusters")
    seed.add_argument("--p", type=int, required=True, help="Number of devices")
    seed.add_argument("--mode", choices=[m.value for m in SeedMode], default=None, help="exact_bnb or greedy")

    solve = sub.add_parser("solve", parents=[common], help="Place devices")
    solve.add_argument("--problem", choices=[p.value for p in Problem], default=Problem.MNLCLP.value)
    solve.add_argument("--p", type=int, help="Number of devices (mnlclp) or device cap (psnlclp)")
    solve.add_argument("--gamma", type=float, help="Target covered fraction (psnlclp)")
    solve.add_argument("--strategy", choices=[s.value for s in Strategy], default=None)
    solve.add_argument("--random-seeds", type=int, default=None, help="Random multistart points (default: 200)")
    solve.add_argument("--step-tol", type=float, default=None, help="Final pattern step relative to R (default: 1e-6)")
    solve.add_argument("--svg", action="store_true", help="Also write an SVG drawing")

    evaluate = sub.add_parser("evaluate", parents=[common], help="Coverage of a placement or an external model solution")
    evaluate.add_argument("--placement", help="Placement JSON {devices:[{x,y,radius,norm}]}")
    evaluate.add_argument("--model", help="Exported .cmodel file")
    evaluate.add_argument("--solution", help="JSON object mapping model variables to values")

    export = sub.add_parser("export", parents=[common], help="Export the exact conic model")
    export.add_argument("--problem", choices=[p.value for p in Problem], default=Problem.MNLCLP.value)
    export.add_argument("--p", type=int, help="Number of devices (psnlclp: defaults to the device-count bound)")
    export.add_argument("--gamma", type=float, help="Target covered fraction (psnlclp)")
    export.add_argument("--costs", type=float, nargs="+", help="Per-device set-up costs (psnlclp)")
    export.add_argument("--helly-triples", action="store_true", help="Emit incompatible-triple rows")
    export.add_argument("--seed-ilp", action="store_true", help="Export the seed edge-assignment model")
    export.add_argument("--format", choices=["conic_text"], default="conic_text")

    compare = sub.add_parser("compare", parents=[common], help="Deviation from node- and edge-restricted placements")
    compare.add_argument("--ps", type=int, nargs="+", default=[2, 5, 8], help="Device counts (default: 2 5 8)")
    compare.add_argument("--radii", type=float, nargs="+", default=[0.1, 0.25, 0.5], help="Radii (default: 0.1 0.25 0.5)")
    compare.add_argument("--workers", type=int, default=None, help="Worker processes")

    plot = sub.add_parser("plot", parents=[common], help="SVG drawing of a network and placement")
    plot.add_argument("--placement", help="Placement JSON to draw")
    return parser


def _client(args: argparse.Namespace) -> LeakCoverClient:
    client = LeakCoverClient(config_path=args.config) if args.config else LeakCoverClient()
    ball = client.config.ball
    solver = client.config.solver.model_dump()
    solver["rng_seed"] = args.rng_seed
    if getattr(args, "random_seeds", None) is not None:
        solver["random_seeds"] = args.random_seeds
    if getattr(args, "step_tol", None) is not None:
        solver["step_tol"] = args.step_tol
    sections: Dict[str, Any] = {
        "scale_radius": args.scale_radius,
        "ball": Ball(
            norm=Norm(args.norm or ball.norm),
            radius=args.radius if args.radius is not None else ball.radius,
        ),
        "solver": SolverConfig(**solver),
    }
    if getattr(args, "mode", None):
        sections["seed"] = {**client.config.seed.model_dump(), "mode": args.mode}
    if getattr(args, "workers", None):
        sections["workers"] = args.workers
    client.update_config(**sections)
    return client


def _write_json(data: Any, path: Path) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as f:
        json.dump(data, f, indent=2, sort_keys=True)
    return path


def cmd_scale(args, client, net, out: Path) -> List[Path]:
    graph = net.to_graph()
    print(f"Network: {net.name}")
    print(f"  Nodes: {len(net.nodes)}  Edges: {len(net.edges)}")
    print(f"  Components: {nx.number_connected_components(graph)}")
    print(f"  Total weighted length: {total_weighted_length(net):.6f}")
    path = out / f"{net.name}_scaled.json"
    save_network(net, path)
    return [path]


def cmd_compat(args, client, net, out: Path) -> List[Path]:
    table = build_table(net, client.config.ball)
    print(f"Incompatible pairs: {len(table.pairs)}  triples: {len(table.triples)}")
    return [_write_json(table.to_dict(), out / f"{net.name}_compat.json")]


def cmd_seed(args, client, net, out: Path) -> List[Path]:
    _check_device_count(args)
    seed = client.seed(net, args.p)
    print(f"Seed clusters: {len(seed.clusters)}  value: {seed.ilp_value:.6f}  optimal: {seed.optimal}")
    return [_write_json(seed_to_dict(seed), out / f"{net.name}_seed_p{args.p}.json")]


def cmd_solve(args, client, net, out: Path) -> List[Path]:
    problem = Problem(args.problem)
    if problem == Problem.MNLCLP and args.p is None:
        raise UsageError("solve --problem mnlclp requires --p")
    if problem == Problem.PSNLCLP and args.gamma is None:
        raise UsageError("solve --problem psnlclp requires --gamma")
    _check_device_count(args)
    strategy = Strategy(args.strategy or client.config.strategy)
    if problem == Problem.PSNLCLP and strategy in BASELINES:
        raise UsageError(f"--strategy {strategy.value} supports --problem mnlclp only")
    placement, report = client.solve(net, problem, args.p, args.gamma, strategy)
    print(f"Devices: {len(placement.devices)}  covered fraction: {report.fraction:.6f}")
    stem = f"{net.name}_{problem.value}"
    paths = [_write_json(placement_to_dict(placement, report), out / f"{stem}.json")]
    if args.svg:
        paths.append(plot_placement(net, placement, out / f"{stem}.svg", title=f"{net.name} {problem.value}"))
    return paths


def cmd_evaluate(args, client, net, out: Path) -> List[Path]:
    if args.placement:
        with open(args.placement, "r", encoding="utf-8") as f:
            placement = placement_from_dict(json.load(f))
        report = client.evaluate(net, placement)
        print(f"Covered fraction: {report.fraction:.6f}")
        return [_write_json(report.model_dump(), out / f"{net.name}_report.json")]
    if not (args.model and args.solution):
        raise UsageError("evaluate requires --placement, or --model with --solution")
    with open(args.model, "rb") as f:
        model = parse(f.read())
    with open(args.solution, "r", encoding="utf-8") as f:
        solution = json.load(f)
    check = verify_solution(model, net, solution)
    print(f"Feasible: {check.feasible}  violations: {len(check.violations)}  coverage gap: {check.coverage_gap:.3g}")
    return [_write_json(check.model_dump(), out / f"{net.name}_verification.json")]


def cmd_export(args, client, net, out: Path) -> List[Path]:
    problem = Problem(args.problem)
    if problem == Problem.MNLCLP and args.p is None:
        raise UsageError("export --problem mnlclp requires --p")
    if problem == Problem.PSNLCLP and args.gamma is None and not args.seed_ilp:
        raise UsageError("export --problem psnlclp requires --gamma")
    _check_device_count(args)
    model = client.export(net, problem, args.p, args.gamma, args.costs, args.helly_triples, args.seed_ilp)
    kind = "seed" if args.seed_ilp else problem.value
    path = out / f"{net.name}_{kind}.cmodel"
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(serialize(model, args.format))
    counts = model.metadata["counts"]
    print(f"Variables: {counts['variables']} ({counts['binaries']} binary)  "
          f"linear rows: {counts['linear_rows']}  cone rows: {counts['cone_rows']}")
    return [path]


def cmd_compare(args, client, net, out: Path) -> List[Path]:
    frame = client.compare(net, args.ps, args.radii)
    print(frame.to_string(index=False))
    return list(save_report(frame, out, stem=f"{net.name}_compare"))


def cmd_plot(args, client, net, out: Path) -> List[Path]:
    placement = None
    if args.placement:
        with open(args.placement, "r", encoding="utf-8") as f:
            placement = placement_from_dict(json.load(f))
    return [plot_placement(net, placement, out / f"{net.name}.svg", title=net.name)]


COMMANDS = {
    "scale": cmd_scale,
    "compat": cmd_compat,
    "seed": cmd_seed,
    "solve": cmd_solve,
    "evaluate": cmd_evaluate,
    "export": cmd_export,
    "compare": cmd_compare,
    "plot": cmd_plot,
}


def main(argv: Optional[List[str]] = None) -> int:
    """Main function; returns the exit code"""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)

    level = logging.WARNING if args.verbose == 0 else logging.INFO if args.verbose == 1 else logging.DEBUG
    logging.basicConfig(level=level, format="%(asctime)s %(name)s %(levelname)s %(message)s")

    start = time.perf_counter()
    out = Path(args.out)
    try:
        client = _client(args)
        net = client.load_network(args.network)
        outputs = COMMANDS[args.command](args, client, net, out)
    except (UsageError, ValidationError) as e:
        parser.print_usage(sys.stderr)
        print(f"Usage error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except SolverGuardError as e:
        print(f"Solver stopped: {e}", file=sys.stderr)
        return EXIT_GUARD
    except (OSError, NetworkValidationError, ModelExportError, json.JSONDecodeError) as e:
        print(f"Input/output error: {e}", file=sys.stderr)
        return EXIT_IO
    except ValueError as e:
        parser.print_usage(sys.stderr)
        print(f"Usage error: {e}", file=sys.stderr)
        return EXIT_USAGE

    manifest = RunManifest(
        command=args.command,
        flags={k: v for k, v in vars(args).items() if k != "command"},
        rng_seed=args.rng_seed,
        version=__version__,
        wall_time=time.perf_counter() - start,
        outputs=[str(p) for p in outputs],
    )
    _write_json(manifest.model_dump(), out / f"{net.name}_{args.command}_manifest.json")
    for path in outputs:
        print(f"  Saved: {path}")
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
