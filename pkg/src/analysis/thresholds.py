"""Backlog thresholds q_th, t* and B of the throughput-optimality argument.

The thresholds are astronomically large, so every result is a ``LogMagnitude``
keyed on log log of the quantity; ``log_value`` and ``value`` are filled in
when they fit in a double.
"""

from __future__ import annotations

import math

import numpy as np
from pydantic import BaseModel, Field

from src.errors import DomainError
from src.scheduling.weights import (
    GROWTH_KINDS,
    WeightFunctionSpec,
    WeightKind,
    log_log1p_f_inverse,
)

_LOG_2 = math.log(2.0)
_LOG_16 = math.log(16.0)
_LOG_64 = math.log(64.0)
_EXP_LIMIT = 709.0


class LogMagnitude(BaseModel):
    """A huge positive quantity x stored through log log x"""

    log_log_value: float
    log_value: float
    value: float | None = None

    @classmethod
    def from_log_log(cls, log_log_value: float) -> LogMagnitude:
        log_value = math.exp(log_log_value) if log_log_value < _EXP_LIMIT else math.inf
        value = math.exp(log_value) if log_value < _EXP_LIMIT else None
        return cls(log_log_value=log_log_value, log_value=log_value, value=value)

    @classmethod
    def from_log(cls, log_value: float) -> LogMagnitude:
        if log_value <= 0.0:
            raise DomainError(f"LogMagnitude needs a quantity above 1, got log {log_value}")
        value = math.exp(log_value) if log_value < _EXP_LIMIT else None
        return cls(log_log_value=math.log(log_value), log_value=log_value, value=value)


def _log_sum(a: LogMagnitude, b: LogMagnitude) -> LogMagnitude:
    """log(x + y) for x, y given as LogMagnitudes"""
    if math.isfinite(a.log_value) and math.isfinite(b.log_value):
        return LogMagnitude.from_log(float(np.logaddexp(a.log_value, b.log_value)))
    return a if a.log_log_value >= b.log_log_value else b


def _log_terms(num_links: int, epsilon: float, delta: float, spec: WeightFunctionSpec) -> tuple[float, float]:
    """log of log(64 N 16^N / delta) and log of f(g^{-1}(16 N^2 / epsilon))"""
    log_a = math.log(_LOG_64 + math.log(num_links) + num_links * _LOG_16 - math.log(delta))
    y = 16.0 * num_links**2 / epsilon
    if spec.kind is WeightKind.LOG_OVER_LOGLOG:
        # g^{-1}(y): log(1 + x) = e^y - e, hence f = (e^y - e) / y
        log_b = y + math.log1p(-math.exp(1.0 - y)) - math.log(y)
    else:
        # log(1 + x) = y^(1/theta), hence f = y^((1-theta)/theta)
        log_b = (1.0 - spec.theta) / spec.theta * math.log(y)
    return log_a, log_b


def _check_parameters(num_links: int, epsilon: float, delta: float) -> None:
    if num_links < 1:
        raise DomainError(f"N must be positive, got {num_links}")
    if not 0.0 < epsilon < 1.0:
        raise DomainError(f"epsilon must lie in (0, 1), got {epsilon}")
    if not 0.0 < delta < 1.0:
        raise DomainError(f"delta must lie in (0, 1), got {delta}")


def q_threshold_general(num_links: int, epsilon: float, delta: float, spec: WeightFunctionSpec) -> LogMagnitude:
    """
    log(1 + q_th) with q_th = f^{-1}((2N/eps) max{log(64 N 16^N / delta), f(g^{-1}(16 N^2 / eps))})
    """
    _check_parameters(num_links, epsilon, delta)
    if spec.kind not in GROWTH_KINDS:
        raise DomainError(f"No threshold formula for weight kind {spec.kind.value}")
    log_argument = math.log(2.0 * num_links / epsilon) + max(_log_terms(num_links, epsilon, delta, spec))
    return LogMagnitude.from_log_log(log_log1p_f_inverse(spec, log_argument))


def q_threshold(num_links: int, epsilon: float, delta: float, spec: WeightFunctionSpec) -> LogMagnitude:
    """
    log(1 + q_th).

    LOG_POWER uses the closed form
        log(1 + q_th) = max{(2N/eps) log(64 N 16^N / delta), (2N/eps) (16 N^2 / eps)^(1/theta)}^(1/(1-theta));
    LOG_OVER_LOGLOG uses the general f^{-1} form.
    """
    _check_parameters(num_links, epsilon, delta)
    if spec.kind is WeightKind.LOG_POWER:
        theta = spec.theta
        scale = math.log(2.0 * num_links / epsilon)
        first = scale + math.log(_LOG_64 + math.log(num_links) + num_links * _LOG_16 - math.log(delta))
        second = scale + math.log(16.0 * num_links**2 / epsilon) / theta
        return LogMagnitude.from_log_log(max(first, second) / (1.0 - theta))
    if spec.kind is WeightKind.LOG_OVER_LOGLOG:
        return q_threshold_general(num_links, epsilon, delta, spec)
    raise DomainError(f"No threshold formula for weight kind {spec.kind.value}")


def t_star(
    num_links: int,
    epsilon: float,
    delta: float,
    theta: float,
    q_th: LogMagnitude,
) -> LogMagnitude:
    """
    t* = [(2 + q_th)^(eps/2N) 16^N log((4/delta) (2(1 + q_th))^(N/2))]^(1 / (1 - eps/2N)),
    with ``q_th`` given as log(1 + q_th).
    """
    _check_parameters(num_links, epsilon, delta)
    if not 0.0 < theta < 1.0:
        raise DomainError(f"theta must lie in (0, 1), got {theta}")
    c = epsilon / (2.0 * num_links)
    if c >= 1.0:
        raise DomainError(f"eps/2N = {c} must be below 1")

    L = q_th.log_value
    if not math.isfinite(L):
        # (eps/2N) log(2 + q_th) dominates every other term
        return LogMagnitude.from_log_log(math.log(c / (1.0 - c)) + q_th.log_log_value)

    log_two_plus = float(np.logaddexp(L, 0.0))
    inner = math.log(4.0 / delta) + 0.5 * num_links * (_LOG_2 + L)
    log_value = (c * log_two_plus + num_links * _LOG_16 + math.log(inner)) / (1.0 - c)
    return LogMagnitude.from_log(log_value)


def b_threshold(
    num_links: int,
    epsilon: float,
    delta: float,
    spec: WeightFunctionSpec,
    q_th: LogMagnitude,
    t_star_value: LogMagnitude,
) -> LogMagnitude:
    """log(1 + B), B = max{q_th + t*, f^{-1}((N log 2 + log(2/delta)) / (eps/2))}"""
    _check_parameters(num_links, epsilon, delta)
    first = _log_sum(q_th, t_star_value)
    argument = (num_links * _LOG_2 + math.log(2.0 / delta)) / (epsilon / 2.0)
    second = LogMagnitude.from_log_log(log_log1p_f_inverse(spec, math.log(argument)))
    return first if first.log_log_value >= second.log_log_value else second


class ThresholdReport(BaseModel):
    """All thresholds for one parameter set, with the intermediate terms of q_th"""

    num_links: int
    epsilon: float
    delta: float
    kind: WeightKind
    theta: float
    log_log_term: float = Field(description="log log(64 N 16^N / delta)")
    log_growth_term: float = Field(description="log f(g^{-1}(16 N^2 / eps))")
    q_th: LogMagnitude
    q_th_general: LogMagnitude
    t_star: LogMagnitude
    b: LogMagnitude


def threshold_report(num_links: int, epsilon: float, delta: float, spec: WeightFunctionSpec) -> ThresholdReport:
    q_th = q_threshold(num_links, epsilon, delta, spec)
    t_star_value = t_star(num_links, epsilon, delta, spec.theta, q_th)
    log_a, log_b = _log_terms(num_links, epsilon, delta, spec)
    return ThresholdReport(
        num_links=num_links,
        epsilon=epsilon,
        delta=delta,
        kind=spec.kind,
        theta=spec.theta,
        log_log_term=log_a,
        log_growth_term=log_b,
        q_th=q_th,
        q_th_general=q_threshold_general(num_links, epsilon, delta, spec),
        t_star=t_star_value,
        b=b_threshold(num_links, epsilon, delta, spec, q_th, t_star_value),
    )
