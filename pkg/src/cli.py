"""Command-line front end: ``csma simulate | analyze | verify | thresholds``.

Exit codes: 0 success, 1 a run or verification check failed, 2 invalid
configuration or arguments.
"""

from __future__ import annotations

import argparse
import asyncio
import json
import logging
import sys
from importlib.resources import files
from pathlib import Path
from typing import Sequence

import numpy as np
from pydantic import ValidationError

from src.analysis.report import analyze_chain
from src.analysis.thresholds import threshold_report
from src.config import get_settings
from src.errors import ConfigError, CsmaError
from src.network.conflict_graph import GraphSpec, build_graph, load_graph
from src.runner import ExperimentPlan, load_plan, run_sweep
from src.scheduling.distributed_mac import MacMechanism, enumerate_decision_distribution
from src.scheduling.weights import WeightConfig, WeightFunctionSpec, WeightKind, effective_weights
from src.verify import SUITES, run_suites

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_FAILED = 1
EXIT_CONFIG = 2


def _parse_numbers(text: str, what: str) -> list[float]:
    try:
        return [float(part) for part in text.split(",") if part.strip()]
    except ValueError as e:
        raise ConfigError(f"--{what} expects comma-separated numbers, got {text!r}") from e


def _emit(payload: str, out: str | None) -> None:
    if out is None:
        print(payload)
        return
    path = Path(out)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(payload + "\n", encoding="utf-8")
    logger.info("Wrote %s", path)


def load_preset(name: str) -> ExperimentPlan:
    resource = files("src.presets") / f"{name}.json"
    if not resource.is_file():
        raise ConfigError(f"Unknown preset {name!r}")
    return ExperimentPlan.model_validate(json.loads(resource.read_text(encoding="utf-8")))


# ============================================================================
# Subcommands
# ============================================================================

def cmd_simulate(args: argparse.Namespace) -> int:
    plan = load_plan(args.config) if args.config else load_preset(args.preset)
    if args.horizon is not None:
        plan = plan.model_copy(update={"sim": plan.sim.model_copy(update={"horizon": args.horizon})})
    out_root = args.out or plan.output_dir

    summary = asyncio.run(
        run_sweep(
            plan,
            out_root=out_root,
            workers=args.workers,
            seed_base=args.seed_base,
            progress_callback=logger.info,
        )
    )
    for run in summary["runs"]:
        if run["status"] == "completed":
            print(f"{run['kind']:>20}  rho={run['rho']:<6g} seed={run['seed']:<4d} avg queue {run['time_avg_queue']:.4f}")
        else:
            print(f"{run['kind']:>20}  rho={run['rho']:<6g} seed={run['seed']:<4d} FAILED: {run['error']}")
    print(f"Summary written to {Path(out_root) / 'summary.json'}")
    return EXIT_OK if summary["failed"] == 0 else EXIT_FAILED


def cmd_analyze(args: argparse.Namespace) -> int:
    graph = load_graph(args.graph) if args.graph else build_graph(GraphSpec(builtin=args.builtin))
    cap = get_settings().enumeration_cap
    if graph.num_links > cap:
        raise ConfigError(
            f"N={graph.num_links} exceeds the exact-analysis cap of {cap} links; "
            "use `csma simulate` for networks this size"
        )

    if args.weights is not None:
        weights = np.asarray(_parse_numbers(args.weights, "weights"))
    else:
        queues = np.asarray(_parse_numbers(args.queues, "queues"))
        config = WeightConfig(
            spec=WeightFunctionSpec(kind=args.kind, theta=args.theta),
            epsilon=args.epsilon,
            num_links=graph.num_links,
        )
        weights = effective_weights(config, queues)
    if weights.shape != (graph.num_links,):
        raise ConfigError(f"Expected {graph.num_links} values, got {weights.shape[0]}")

    law = None
    if args.chain == "multi":
        law = enumerate_decision_distribution(graph, MacMechanism(args.mechanism), window=args.window)
    report = analyze_chain(graph, weights, args.chain, law)
    _emit(report.model_dump_json(indent=2), args.out)
    return EXIT_OK if report.passed else EXIT_FAILED


def cmd_verify(args: argparse.Namespace) -> int:
    report = run_suites(args.suite)
    _emit(report.model_dump_json(indent=2), args.out)
    return EXIT_OK if report.passed else EXIT_FAILED


def cmd_thresholds(args: argparse.Namespace) -> int:
    spec = WeightFunctionSpec(kind=args.kind, theta=args.theta)
    report = threshold_report(args.links, args.epsilon, args.delta, spec)
    _emit(report.model_dump_json(indent=2), args.out)
    return EXIT_OK


# ============================================================================
# Parser
# ============================================================================

def build_parser() -> argparse.ArgumentParser:
    settings = get_settings()
    parser = argparse.ArgumentParser(prog="csma", description=__doc__.splitlines()[0])
    parser.add_argument("--log-level", default=settings.log_level, help="Logging level (default: %(default)s)")
    commands = parser.add_subparsers(dest="command", required=True)
    kinds = [k.value for k in WeightKind]

    simulate = commands.add_parser("simulate", help="Run an experiment plan")
    source = simulate.add_mutually_exclusive_group()
    source.add_argument("--config", help="Experiment plan JSON")
    source.add_argument("--preset", default="paper_grid", help="Shipped plan name (default: %(default)s)")
    simulate.add_argument("--out", help="Output directory (default: the plan's output_dir)")
    simulate.add_argument("--workers", type=int, default=None, help="Parallel configurations (default: CSMA_WORKERS)")
    simulate.add_argument("--seed-base", type=int, default=None, help="Offset added to every plan seed")
    simulate.add_argument("--horizon", type=int, default=None, help="Override the plan's horizon")
    simulate.set_defaults(handler=cmd_simulate)

    analyze = commands.add_parser("analyze", help="Exact spectral and conductance report")
    graph_source = analyze.add_mutually_exclusive_group(required=True)
    graph_source.add_argument("--graph", help="Graph spec JSON")
    graph_source.add_argument("--builtin", help="Built-in graph: grid4x4, path<n>, cycle<n>, star<n>, K<n>")
    values = analyze.add_mutually_exclusive_group(required=True)
    values.add_argument("--weights", help="Effective weights, comma-separated")
    values.add_argument("--queues", help="Queue lengths, comma-separated (weights via --kind)")
    analyze.add_argument("--kind", choices=kinds, default=WeightKind.LOG_OVER_LOGLOG.value)
    analyze.add_argument("--theta", type=float, default=0.5)
    analyze.add_argument("--epsilon", type=float, default=0.2)
    analyze.add_argument("--chain", choices=["single", "multi"], default="single")
    analyze.add_argument(
        "--mechanism",
        choices=[m.value for m in MacMechanism],
        default=MacMechanism.BERNOULLI_HALF.value,
        help="Decision mechanism for --chain multi",
    )
    analyze.add_argument("--window", type=int, default=32)
    analyze.add_argument("--out", help="Write the JSON report here instead of stdout")
    analyze.set_defaults(handler=cmd_analyze)

    verify = commands.add_parser("verify", help="Run the self-check suites")
    verify.add_argument("--suite", action="append", choices=list(SUITES), help="Run only this suite (repeatable)")
    verify.add_argument("--out", help="Write the JSON results here instead of stdout")
    verify.set_defaults(handler=cmd_verify)

    thresholds = commands.add_parser("thresholds", help="Log-scale backlog thresholds q_th, t*, B")
    thresholds.add_argument("--links", type=int, required=True, help="Number of links N")
    thresholds.add_argument("--epsilon", type=float, default=0.2)
    thresholds.add_argument("--delta", type=float, default=0.1)
    thresholds.add_argument("--kind", choices=kinds, default=WeightKind.LOG_OVER_LOGLOG.value)
    thresholds.add_argument("--theta", type=float, default=0.5)
    thresholds.add_argument("--out", help="Write the JSON report here instead of stdout")
    thresholds.set_defaults(handler=cmd_thresholds)

    return parser


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=args.log_level.upper(),
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )
    try:
        return args.handler(args)
    except (CsmaError, ValidationError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
