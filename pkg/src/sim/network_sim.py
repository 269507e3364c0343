"""Slotted queueing simulation driven by the Glauber scheduling chains.

Per slot t, in order:
    1. weights w~(t) from the queues q(t-1) (oracle q_max)
    2. one chain step (single-site, or decision schedule + multi-site step)
    3. Bernoulli arrivals a(t)
    4. q(t) = (q(t-1) - x(t))^+ + a(t)

Each run owns two child streams of its seed: one for the chain and the
control slot, one for arrivals. Runs with the same seed therefore see the same
arrival sequence whatever weight function or mechanism they use.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Literal

import numpy as np
from pydantic import BaseModel, Field, model_validator

from src.config import get_settings
from src.errors import ConfigError, DomainError, InfeasibleScheduleError
from src.network.conflict_graph import ConflictGraph, Schedule, is_independent
from src.scheduling.distributed_mac import MacConfig, draw_decision
from src.scheduling.glauber import (
    ChainState,
    SeededRng,
    multi_site_step,
    single_site_step,
)
from src.scheduling.weights import WeightConfig, effective_weights, f_array
from src.sim.mws import mws_oracle

logger = logging.getLogger(__name__)

RATE_SUM_TOL = 1e-9


# ============================================================================
# Configuration models
# ============================================================================

class ArrivalComponent(BaseModel):
    """One schedule of the convex combination and its coefficient"""

    links: list[int] = Field(description="1-based link ids of the schedule")
    coefficient: float = Field(ge=0.0)


class ArrivalConfig(BaseModel):
    """Per-link Bernoulli rates, given directly or as rho * sum_i c_i M_i"""

    rates: list[float] | None = Field(default=None, description="Explicit lambda vector")
    rho: float | None = Field(default=None, ge=0.0, lt=1.0, description="Load scaling")
    components: list[ArrivalComponent] | None = Field(default=None)

    @model_validator(mode="after")
    def exactly_one_form(self) -> ArrivalConfig:
        structured = self.rho is not None or self.components is not None
        if (self.rates is not None) == structured:
            raise ValueError("give either 'rates' or 'rho' + 'components'")
        if structured:
            if self.rho is None or not self.components:
                raise ValueError("the structured form needs both 'rho' and 'components'")
            total = sum(c.coefficient for c in self.components)
            if abs(total - 1.0) > RATE_SUM_TOL:
                raise ValueError(f"component coefficients sum to {total}, not 1")
        return self


class SimConfig(BaseModel):
    """Run-level switches"""

    horizon: int = Field(default=10_000, ge=1)
    seed: int = 0
    record_every: int | None = Field(default=None, ge=1, description="Slots between trace rows")
    frozen: bool = Field(default=False, description="Disable arrivals and departures")
    q0: list[int] | None = Field(default=None, description="Initial queues (default all zero)")
    fixed_weights: list[float] | None = Field(
        default=None, description="Frozen mode only: use these w~ instead of the weights of q0"
    )
    oracle: bool = Field(default=True, description="Sample the max-weight oracle")
    mws_every: int | None = Field(default=None, ge=1, description="Slots between oracle samples")


# ============================================================================
# Trace types
# ============================================================================

@dataclass
class SlotRecord:
    """State of one recorded slot"""

    slot: int
    schedule: int  # bitmask of X(t)
    decision: int | None  # bitmask of m(t), distributed mode only
    arrivals: np.ndarray
    queues: np.ndarray
    achieved_weight: float  # sum of w_i(t) over X(t), raw weights
    oracle_weight: float | None = None
    in_chi: bool | None = None


@dataclass
class SimulationTrace:
    """Recorded slots plus per-slot series needed by the stability metrics"""

    num_links: int
    mode: Literal["basic", "distributed"]
    epsilon: float
    records: list[SlotRecord] = field(default_factory=list)
    avg_queue: np.ndarray = field(default_factory=lambda: np.zeros(0))
    max_queue: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.int64))
    lyapunov: np.ndarray = field(default_factory=lambda: np.zeros(0))
    departures: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.int64))
    schedule_sizes: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.int64))
    schedule_masks: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.int64))
    oracle_slots: list[int] = field(default_factory=list)
    oracle_achieved: list[float] = field(default_factory=list)
    oracle_best: list[float] = field(default_factory=list)

    @property
    def horizon(self) -> int:
        return len(self.avg_queue)

    @property
    def final_queues(self) -> np.ndarray:
        return self.records[-1].queues if self.records else np.zeros(self.num_links, dtype=np.int64)


# ============================================================================
# Operations
# ============================================================================

def expand_arrivals(structured: ArrivalConfig, graph: ConflictGraph) -> np.ndarray:
    """lambda_l = rho * sum_i c_i [l in M_i], or the explicit rates"""
    n = graph.num_links
    if structured.rates is not None:
        rates = np.asarray(structured.rates, dtype=np.float64)
        if rates.shape != (n,):
            raise ConfigError(f"Expected {n} arrival rates, got {rates.shape[0]}")
    else:
        rates = np.zeros(n)
        for component in structured.components or []:
            schedule = Schedule.of(n, component.links)
            if not is_independent(graph, schedule):
                raise InfeasibleScheduleError(f"Arrival component {schedule!r} is not a feasible schedule")
            rates += component.coefficient * schedule.to_array()
        rates *= structured.rho

    if np.any(rates < 0.0) or np.any(rates >= 1.0):
        raise DomainError(f"Arrival rates must lie in [0, 1), got {rates.tolist()}")
    return rates


def sample_arrivals(rates: np.ndarray, rng: SeededRng) -> np.ndarray:
    """Independent Bernoulli(lambda_l) draws as an int64 vector"""
    return (rng.uniforms(len(rates)) < rates).astype(np.int64)


def queue_update(queues: np.ndarray, schedule: Schedule | np.ndarray, arrivals: np.ndarray) -> np.ndarray:
    """q_l(t) = (q_l(t-1) - x_l(t))^+ + a_l(t)"""
    served = schedule.to_array() if isinstance(schedule, Schedule) else np.asarray(schedule, dtype=bool)
    return np.maximum(queues - served.astype(np.int64), 0) + arrivals


def _initial_queues(graph: ConflictGraph, sim: SimConfig) -> np.ndarray:
    if sim.q0 is None:
        return np.zeros(graph.num_links, dtype=np.int64)
    queues = np.asarray(sim.q0, dtype=np.int64)
    if queues.shape != (graph.num_links,) or np.any(queues < 0):
        raise ConfigError(f"q0 must hold {graph.num_links} nonnegative integers")
    return queues


def _simulate(
    graph: ConflictGraph,
    weight_config: WeightConfig,
    arrival_config: ArrivalConfig,
    sim: SimConfig,
    mac_config: MacConfig | None,
) -> SimulationTrace:
    n = graph.num_links
    if weight_config.num_links != n:
        raise ConfigError(f"Weight config is for N={weight_config.num_links}, graph has N={n}")
    settings = get_settings()
    record_every = sim.record_every or settings.record_every
    mws_every = sim.mws_every or settings.mws_every
    mode: Literal["basic", "distributed"] = "basic" if mac_config is None else "distributed"

    rates = expand_arrivals(arrival_config, graph)
    chain_rng, arrival_rng = SeededRng(sim.seed).spawn(2)
    queues = _initial_queues(graph, sim)
    state = ChainState.start(graph)

    fixed = None
    if sim.frozen and sim.fixed_weights is not None:
        fixed = np.asarray(sim.fixed_weights, dtype=np.float64)
        if fixed.shape != (n,):
            raise ConfigError(f"fixed_weights must hold {n} values")

    horizon = sim.horizon
    trace = SimulationTrace(num_links=n, mode=mode, epsilon=weight_config.epsilon)
    trace.avg_queue = np.empty(horizon)
    trace.max_queue = np.empty(horizon, dtype=np.int64)
    trace.lyapunov = np.empty(horizon)
    trace.departures = np.empty(horizon, dtype=np.int64)
    trace.schedule_sizes = np.empty(horizon, dtype=np.int64)
    trace.schedule_masks = np.empty(horizon, dtype=np.int64)
    powers = 1 << np.arange(n, dtype=np.int64)
    no_arrivals = np.zeros(n, dtype=np.int64)

    raw = f_array(weight_config.spec, queues)
    effective = fixed if fixed is not None else effective_weights(weight_config, queues)

    for t in range(1, horizon + 1):
        decision = None
        if mac_config is None:
            state = single_site_step(graph, state, effective, chain_rng)
        else:
            decision = draw_decision(graph, mac_config, chain_rng)
            state = multi_site_step(graph, state, effective, decision, chain_rng)
        active = state.active

        achieved = float(raw[active].sum())
        oracle_weight = None
        in_chi = None
        if sim.oracle and t % mws_every == 0:
            _, oracle_weight = mws_oracle(graph, raw)
            in_chi = achieved < (1.0 - weight_config.epsilon) * oracle_weight
            trace.oracle_slots.append(t)
            trace.oracle_achieved.append(achieved)
            trace.oracle_best.append(oracle_weight)

        if sim.frozen:
            arrivals = no_arrivals
            departures = 0
        else:
            arrivals = sample_arrivals(rates, arrival_rng)
            departures = int(np.count_nonzero(active & (queues > 0)))
            queues = queue_update(queues, active, arrivals)
            raw = f_array(weight_config.spec, queues)
            effective = effective_weights(weight_config, queues)

        index = t - 1
        trace.avg_queue[index] = queues.sum() / n
        trace.max_queue[index] = queues.max()
        trace.lyapunov[index] = float(np.sqrt(np.sum(raw * raw)))
        trace.departures[index] = departures
        trace.schedule_sizes[index] = int(np.count_nonzero(active))
        trace.schedule_masks[index] = int(powers[active].sum())

        if t % record_every == 0 or t == horizon:
            trace.records.append(SlotRecord(
                slot=t,
                schedule=int(trace.schedule_masks[index]),
                decision=None if decision is None else int(powers[decision].sum()),
                arrivals=arrivals.copy(),
                queues=queues.copy(),
                achieved_weight=achieved,
                oracle_weight=oracle_weight,
                in_chi=in_chi,
            ))
            logger.debug("slot %d: avg queue %.3f, |X| = %d", t, trace.avg_queue[index], trace.schedule_sizes[index])

    return trace


def run_basic(
    graph: ConflictGraph,
    weight_config: WeightConfig,
    arrival_config: ArrivalConfig,
    sim: SimConfig,
) -> SimulationTrace:
    """Simulate the basic algorithm: one single-site Glauber step per slot"""
    return _simulate(graph, weight_config, arrival_config, sim, mac_config=None)


def run_distributed(
    graph: ConflictGraph,
    weight_config: WeightConfig,
    arrival_config: ArrivalConfig,
    mac_config: MacConfig,
    sim: SimConfig,
) -> SimulationTrace:
    """Simulate the distributed algorithm: control slot decision, then a multi-site step"""
    return _simulate(graph, weight_config, arrival_config, sim, mac_config=mac_config)
