"""Summary statistics over a simulation trace"""

from __future__ import annotations

import numpy as np
from pydantic import BaseModel, ConfigDict

from src.errors import DomainError, MissingOracleError
from src.sim.network_sim import SimulationTrace


class StabilityMetrics(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True)

    avg_queue: np.ndarray  # total queue / N after every slot
    running_avg_queue: np.ndarray  # running mean of avg_queue
    time_avg_queue: float
    lyapunov: np.ndarray  # (sum_i f(q_i)^2)^(1/2) after every slot
    time_avg_lyapunov: float
    max_queue: int


def chi_fraction(trace: SimulationTrace, epsilon: float) -> float:
    """Fraction of oracle-sampled slots whose schedule weight is below (1 - eps) w*"""
    if not trace.oracle_slots:
        raise MissingOracleError("The trace has no max-weight oracle samples; rerun with the oracle enabled")
    achieved = np.asarray(trace.oracle_achieved)
    best = np.asarray(trace.oracle_best)
    return float(np.mean(achieved < (1.0 - epsilon) * best))


def stability_metrics(trace: SimulationTrace) -> StabilityMetrics:
    if trace.horizon == 0:
        raise DomainError("Stability metrics need a nonempty trace")
    slots = np.arange(1, trace.horizon + 1)
    return StabilityMetrics(
        avg_queue=trace.avg_queue,
        running_avg_queue=np.cumsum(trace.avg_queue) / slots,
        time_avg_queue=float(trace.avg_queue.mean()),
        lyapunov=trace.lyapunov,
        time_avg_lyapunov=float(trace.lyapunov.mean()),
        max_queue=int(trace.max_queue.max()),
    )


def window_average(series: np.ndarray, start: float, stop: float) -> float:
    """Mean of ``series`` over the fraction [start, stop) of its length"""
    if not 0.0 <= start < stop <= 1.0:
        raise DomainError(f"Window [{start}, {stop}) must lie inside [0, 1]")
    n = len(series)
    window = series[int(start * n):max(int(stop * n), int(start * n) + 1)]
    return float(np.mean(window))


def is_bounded(series: np.ndarray, factor: float = 2.0) -> bool:
    """Last 20% average stays within ``factor`` of the middle 20% average"""
    middle = window_average(series, 0.4, 0.6)
    last = window_average(series, 0.8, 1.0)
    return last <= factor * max(middle, 1e-12)
