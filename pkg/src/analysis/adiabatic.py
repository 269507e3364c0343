"""Weight-drift rate alpha_t and the adiabatic condition alpha_t T_{t+1} <= delta/16.

Backlogs may be given as arbitrarily large Python ints; every quantity is
carried in natural-log scale so the condition can be evaluated far beyond
double range.
"""

from __future__ import annotations

import math
from typing import Literal

from pydantic import BaseModel, Field

from src.analysis.spectral import LogValue, mixing_bound_multi, mixing_bound_single
from src.errors import DomainError
from src.scheduling.weights import (
    WeightConfig,
    f_from_log1p,
    log1p_exact,
    log1p_f_inverse,
    log_f_prime_from_log1p,
)

_LOG_2 = math.log(2.0)


class AdiabaticReport(BaseModel):
    """Outcome of the adiabatic condition at one backlog level"""

    chain: Literal["single", "multi"]
    log1p_q_max: float = Field(description="log(1 + q_max)")
    w_max: float
    w_min: float
    alpha_t: LogValue
    T_next_bound: LogValue
    condition_lhs: LogValue = Field(description="alpha_t * T_{t+1} bound")
    delta: float
    satisfied: bool


def _log_expm1(L: float) -> float:
    if L > 30.0:
        return L + math.log1p(-math.exp(-L))
    return math.log(math.expm1(L))


def log_alpha_from_log1p(config: WeightConfig, L_next: float) -> float:
    """log alpha_t given L_next = log(1 + q_max(t+1))"""
    w_max = f_from_log1p(config.spec, L_next)
    floor = config.epsilon / (2.0 * config.num_links) * w_max
    L_star = log1p_f_inverse(config.spec, floor)
    # f^{-1}(w_min) >= 1 keeps the shifted argument nonnegative
    if L_star < _LOG_2 * (1.0 - 1e-12):
        raise DomainError(
            f"f^-1(w_min) = {math.expm1(L_star):.6g} < 1; the shift f^-1(w_min) - 1 leaves the domain"
        )
    # log(1 + (f^{-1}(w_min) - 1)) = log(f^{-1}(w_min)) = log(e^L* - 1)
    return math.log(2.0 * config.num_links) + log_f_prime_from_log1p(config.spec, _log_expm1(L_star))


def alpha_t(config: WeightConfig, q_max_next: int) -> float:
    """2N f'(f^{-1}(w_min(t+1)) - 1)"""
    return math.exp(log_alpha_from_log1p(config, log1p_exact(q_max_next)))


def adiabatic_condition_from_log1p(
    config: WeightConfig,
    L: float,
    delta: float,
    chain: Literal["single", "multi"] = "single",
) -> AdiabaticReport:
    if not 0.0 < delta < 1.0:
        raise DomainError(f"delta must lie in (0, 1), got {delta}")
    w_max = f_from_log1p(config.spec, L)
    floor = config.epsilon / (2.0 * config.num_links) * w_max
    log_alpha = log_alpha_from_log1p(config, L)

    bound = mixing_bound_multi if chain == "multi" else mixing_bound_single
    T_next = bound(config.num_links, w_max)
    lhs = log_alpha + T_next.log
    return AdiabaticReport(
        chain=chain,
        log1p_q_max=L,
        w_max=w_max,
        w_min=floor,
        alpha_t=LogValue.from_log(log_alpha),
        T_next_bound=T_next,
        condition_lhs=LogValue.from_log(lhs),
        delta=delta,
        satisfied=lhs <= math.log(delta / 16.0),
    )


def adiabatic_condition(
    config: WeightConfig,
    q_max: int,
    delta: float,
    chain: Literal["single", "multi"] = "single",
) -> AdiabaticReport:
    """Evaluate alpha_t * T_{t+1} <= delta/16 with the single- or multi-site mixing bound"""
    return adiabatic_condition_from_log1p(config, log1p_exact(q_max), delta, chain)


def smallest_satisfying_log1p(
    config: WeightConfig,
    delta: float,
    chain: Literal["single", "multi"] = "single",
    L_low: float = 1.0,
    L_high: float = 1e12,
    iterations: int = 200,
) -> float | None:
    """
    Bisection in log(1 + q_max) for where the condition starts holding.

    Assumes the condition is monotone in q_max over [L_low, L_high], true for
    the log-family kinds once the shift stays in the domain.
    """
    def holds(L: float) -> bool:
        try:
            return adiabatic_condition_from_log1p(config, L, delta, chain).satisfied
        except DomainError:
            return False

    if not holds(L_high):
        return None
    low, high = L_low, L_high
    if holds(low):
        return low
    for _ in range(iterations):
        middle = math.sqrt(low * high)
        if holds(middle):
            high = middle
        else:
            low = middle
        if high / low - 1.0 < 1e-12:
            break
    return high
