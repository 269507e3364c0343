"""Sweep runner for simulation experiment plans"""

from __future__ import annotations

import asyncio
import json
import logging
from concurrent.futures import Executor, ProcessPoolExecutor
from pathlib import Path
from typing import Any, Callable, Iterator, Literal

from pydantic import BaseModel, Field, ValidationError, field_validator, model_validator

from src.config import get_settings
from src.errors import ConfigError
from src.network.conflict_graph import GraphSpec, build_graph
from src.scheduling.distributed_mac import MacConfig
from src.scheduling.weights import WeightConfig, WeightFunctionSpec, WeightKind
from src.sim.metrics import chi_fraction, is_bounded, stability_metrics
from src.sim.network_sim import ArrivalComponent, ArrivalConfig, SimConfig, run_basic, run_distributed
from src.sim.trace_io import (
    AVG_QUEUE_FILE,
    DELAY_FILE,
    SUMMARY_FILE,
    TRACE_FILE,
    write_avg_queue_csv,
    write_delay_csv,
    write_summary_json,
    write_trace_csv,
)

logger = logging.getLogger(__name__)

ProgressCallback = Callable[[str], None]


# ============================================================================
# Plan documents
# ============================================================================

class ArrivalPlan(BaseModel):
    """
    Arrival rates for every load in ``rhos``: lambda = rho * sum_i c_i M_i from
    ``components``, or lambda = rho * ``rates`` for an explicit direction.
    """

    rhos: list[float] = Field(default_factory=lambda: [0.8], min_length=1)
    components: list[ArrivalComponent] | None = None
    rates: list[float] | None = None

    @field_validator("rhos")
    @classmethod
    def loads_in_range(cls, rhos: list[float]) -> list[float]:
        for rho in rhos:
            if not 0.0 <= rho < 1.0:
                raise ValueError(f"rho must lie in [0, 1), got {rho}")
        return rhos

    @model_validator(mode="after")
    def exactly_one_form(self) -> ArrivalPlan:
        if (self.components is None) == (self.rates is None):
            raise ValueError("give exactly one of 'components' or 'rates'")
        return self

    def for_load(self, rho: float) -> ArrivalConfig:
        if self.components is not None:
            return ArrivalConfig(rho=rho, components=self.components)
        return ArrivalConfig(rates=[rho * r for r in self.rates or []])


class ExperimentPlan(BaseModel):
    """One JSON document describing a sweep over (weight kind, rho, seed)"""

    graph: GraphSpec
    kinds: list[WeightFunctionSpec] = Field(
        default_factory=lambda: [WeightFunctionSpec(kind=WeightKind.LOG_OVER_LOGLOG)], min_length=1
    )
    epsilon: float = Field(default=0.2, gt=0.0, lt=1.0)
    use_wmin: bool = True
    mode: Literal["basic", "distributed"] = "distributed"
    mac: MacConfig = Field(default_factory=MacConfig)
    arrival: ArrivalPlan
    seeds: list[int] = Field(default_factory=lambda: [0], min_length=1)
    sim: SimConfig = Field(default_factory=SimConfig)
    output_dir: str = "results"

    def combinations(self) -> Iterator[RunSpec]:
        """Every (kind, rho, seed) in a fixed order"""
        for spec in self.kinds:
            for rho in self.arrival.rhos:
                for seed in self.seeds:
                    yield RunSpec(kind=spec, rho=rho, seed=seed)


class RunSpec(BaseModel):
    kind: WeightFunctionSpec
    rho: float
    seed: int

    def directory(self, root: str | Path) -> Path:
        """<root>/<kind>/<rho>/<seed>"""
        return Path(root) / self.kind.label / f"{self.rho:g}" / str(self.seed)


def load_plan(path: str | Path) -> ExperimentPlan:
    """Read and validate a plan; every problem is reported with its JSON location"""
    path = Path(path)
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except OSError as e:
        raise ConfigError(f"{path}: {e.strerror}") from e
    except json.JSONDecodeError as e:
        raise ConfigError(f"{path}:{e.lineno}:{e.colno}: {e.msg}") from e
    try:
        return ExperimentPlan.model_validate(data)
    except ValidationError as e:
        problems = [
            f"{path}: {'.'.join(str(part) for part in err['loc']) or '<root>'}: {err['msg']}"
            for err in e.errors()
        ]
        raise ConfigError("\n".join(problems)) from e


# ============================================================================
# One configuration
# ============================================================================

def run_configuration(plan_data: dict[str, Any], run_data: dict[str, Any], out_root: str) -> dict[str, Any]:
    """
    Simulate one (kind, rho, seed) and write its files.

    Takes plain dicts so it can cross a process boundary.

    Args:
        plan_data: The experiment plan, dumped in JSON mode
        run_data: The RunSpec to simulate, dumped in JSON mode
        out_root: Root directory; files go to <out_root>/<kind>/<rho>/<seed>

    Returns:
        A result record with status "completed" and the stability metrics, or
        status "failed" and the error message
    """
    plan = ExperimentPlan.model_validate(plan_data)
    run = RunSpec.model_validate(run_data)
    result: dict[str, Any] = {"kind": run.kind.label, "rho": run.rho, "seed": run.seed}
    try:
        graph = build_graph(plan.graph)
        weight_config = WeightConfig(
            spec=run.kind,
            epsilon=plan.epsilon,
            num_links=graph.num_links,
            use_wmin=plan.use_wmin,
        )
        sim = plan.sim.model_copy(update={"seed": run.seed})
        arrivals = plan.arrival.for_load(run.rho)
        if plan.mode == "basic":
            trace = run_basic(graph, weight_config, arrivals, sim)
        else:
            trace = run_distributed(graph, weight_config, arrivals, plan.mac, sim)

        directory = run.directory(out_root)
        write_trace_csv(trace, directory / TRACE_FILE)
        write_avg_queue_csv(trace, directory / AVG_QUEUE_FILE)
        metrics = stability_metrics(trace)
        result.update(
            status="completed",
            directory=str(directory),
            time_avg_queue=metrics.time_avg_queue,
            time_avg_lyapunov=metrics.time_avg_lyapunov,
            max_queue=metrics.max_queue,
            bounded=is_bounded(trace.avg_queue),
            chi_fraction=chi_fraction(trace, plan.epsilon) if trace.oracle_slots else None,
        )
    except Exception as e:
        result.update(status="failed", error=f"{type(e).__name__}: {e}")
    return result


# ============================================================================
# Sweep
# ============================================================================

async def run_sweep(
    plan: ExperimentPlan,
    out_root: str | Path | None = None,
    workers: int | None = None,
    seed_base: int | None = None,
    progress_callback: ProgressCallback | None = None,
    executor: Executor | None = None,
) -> dict[str, Any]:
    """
    Run every combination of the plan, at most ``workers`` at a time.

    Args:
        plan: The validated experiment plan
        out_root: Output directory (default: the plan's output_dir)
        workers: Concurrent configurations (default: settings.workers)
        seed_base: Offset added to every plan seed (default: settings.seed_base)
        progress_callback: Optional callback for progress updates
        executor: Pool to run configurations on (default: a ProcessPoolExecutor)

    Returns:
        The summary also written to <out_root>/summary.json, next to delay.csv
    """
    settings = get_settings()
    workers = workers or settings.workers
    seed_base = settings.seed_base if seed_base is None else seed_base
    out_root = Path(out_root or plan.output_dir)
    out_root.mkdir(parents=True, exist_ok=True)

    if seed_base:
        plan = plan.model_copy(update={"seeds": [seed_base + s for s in plan.seeds]})
    runs = list(plan.combinations())
    plan_data = plan.model_dump(mode="json")

    if progress_callback:
        progress_callback(f"Running {len(runs)} configurations on {workers} workers...")

    loop = asyncio.get_running_loop()
    semaphore = asyncio.Semaphore(workers)
    own_executor = executor is None
    pool = executor or ProcessPoolExecutor(max_workers=workers)

    async def run_one(run: RunSpec) -> dict[str, Any]:
        async with semaphore:
            try:
                result = await loop.run_in_executor(
                    pool, run_configuration, plan_data, run.model_dump(mode="json"), str(out_root)
                )
            except Exception as e:
                result = {
                    "kind": run.kind.label,
                    "rho": run.rho,
                    "seed": run.seed,
                    "status": "failed",
                    "error": f"{type(e).__name__}: {e}",
                }
        if result["status"] == "completed":
            logger.info(
                "%s rho=%g seed=%d: time-average queue %.4f",
                result["kind"], result["rho"], result["seed"], result["time_avg_queue"],
            )
        else:
            logger.error("%s rho=%g seed=%d failed: %s", result["kind"], result["rho"], result["seed"], result["error"])
        if progress_callback:
            progress_callback(f"Completed: {result['kind']} rho={result['rho']:g} seed={result['seed']} ({result['status']})")
        return result

    try:
        results = await asyncio.gather(*(run_one(run) for run in runs))
    finally:
        if own_executor:
            pool.shutdown()

    completed = [r for r in results if r["status"] == "completed"]
    write_delay_csv(
        [{"rho": r["rho"], "kind": r["kind"], "time_avg_queue": r["time_avg_queue"]} for r in completed],
        out_root / DELAY_FILE,
    )
    summary = {
        "plan": plan_data,
        "runs": results,
        "completed": len(completed),
        "failed": len(results) - len(completed),
    }
    write_summary_json(summary, out_root / SUMMARY_FILE)

    if progress_callback:
        progress_callback("Sweep complete!")
    return summary
