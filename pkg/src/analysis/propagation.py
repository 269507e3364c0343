"""Exact forward propagation of the time-inhomogeneous scheduling chain"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Iterator, Literal, Mapping, Sequence

import numpy as np

from src.analysis.norms import pi_norm_inv, ratio_alpha, tv_distance
from src.analysis.spectral import slem
from src.errors import DistributionError, DomainError
from src.network.conflict_graph import ConflictGraph, Schedule, enumerate_independent_sets
from src.scheduling.glauber import ChainModel, transition_matrix_multi, transition_matrix_single

logger = logging.getLogger(__name__)


@dataclass
class PropagationResult:
    """
    Per-step laws of the inhomogeneous chain mu_t = mu_{t-1} P_t.

    Row t of ``mu`` and ``pi`` belongs to step t + 1 of the weight trace.
    ``a[t]`` is ||mu_{t+1} - pi_t||_{1/pi_t}; ``sigma`` and ``mixing_time`` are
    filled only when spectra were requested.
    """

    states: tuple[Schedule, ...]
    mu: np.ndarray
    pi: np.ndarray
    tv: np.ndarray
    a: np.ndarray
    sigma: np.ndarray | None = None
    mixing_time: np.ndarray | None = None

    def __len__(self) -> int:
        return len(self.tv)

    def steps(self) -> Iterator[tuple[np.ndarray, np.ndarray, float]]:
        """(mu_t, pi_t, tv_t) per step"""
        for t in range(len(self.tv)):
            yield self.mu[t], self.pi[t], float(self.tv[t])


def propagate_distribution(
    graph: ConflictGraph,
    weight_trace: Sequence[np.ndarray],
    mu0: np.ndarray | Schedule,
    chain: Literal["single", "multi"] = "single",
    decision_distribution: Mapping[Schedule, float] | None = None,
    with_spectra: bool = False,
) -> PropagationResult:
    """
    Propagate an initial law through the kernels built from each weight vector.

    Kernels are cached by weight vector so slowly varying traces with repeated
    values stay cheap.
    """
    states = enumerate_independent_sets(graph)
    if isinstance(mu0, Schedule):
        mu = np.zeros(len(states))
        mu[[s.mask for s in states].index(mu0.mask)] = 1.0
    else:
        mu = np.asarray(mu0, dtype=np.float64)
        if mu.shape != (len(states),) or abs(float(mu.sum()) - 1.0) > 1e-9:
            raise DistributionError(f"mu0 must be a distribution over {len(states)} states")
    if chain == "multi" and decision_distribution is None:
        raise DistributionError("The multi-site chain needs a decision distribution")

    cache: dict[bytes, tuple[ChainModel, float | None]] = {}

    def model_for(weights: np.ndarray) -> tuple[ChainModel, float | None]:
        key = np.asarray(weights, dtype=np.float64).tobytes()
        if key not in cache:
            if chain == "multi":
                model = transition_matrix_multi(graph, weights, decision_distribution, states)
            else:
                model = transition_matrix_single(graph, weights, states)
            cache[key] = (model, slem(model).slem if with_spectra else None)
        return cache[key]

    steps = len(weight_trace)
    mus = np.empty((steps, len(states)))
    pis = np.empty((steps, len(states)))
    tvs = np.empty(steps)
    sigmas = np.empty(steps) if with_spectra else None

    for t, weights in enumerate(weight_trace):
        model, sigma = model_for(weights)
        mu = mu @ model.kernel
        mus[t] = mu
        pis[t] = model.stationary
        tvs[t] = tv_distance(mu, model.stationary)
        if sigmas is not None:
            sigmas[t] = sigma

    a = np.array([pi_norm_inv(mus[t + 1] - pis[t], pis[t]) for t in range(steps - 1)])
    logger.debug("Propagated %d steps over %d states (%d distinct kernels)", steps, len(states), len(cache))

    mixing = None
    if sigmas is not None:
        with np.errstate(divide="ignore"):
            mixing = np.where(sigmas < 1.0, 1.0 / (1.0 - sigmas), np.inf)
    return PropagationResult(
        states=tuple(states),
        mu=mus,
        pi=pis,
        tv=tvs,
        a=a,
        sigma=sigmas,
        mixing_time=mixing,
    )


def fit_decay_rate(tv: np.ndarray, start: int = 10, stop: int = 200) -> float:
    """Geometric rate r with tv_t ~ C r^t, from a log-linear fit over [start, stop)"""
    window = np.asarray(tv[start:stop], dtype=np.float64)
    steps = np.arange(start, start + len(window))
    # below ~1e-12 the differences are float round-off
    usable = window > 1e-12
    slope, _ = np.polyfit(steps[usable], np.log(window[usable]), 1)
    return float(math.exp(slope))


def mixing_sum_time(
    mixing_times: np.ndarray,
    delta: float,
    num_links: int,
    w_max_initial: float,
) -> int | None:
    """
    Smallest t with sum_{k=1}^t 1/T_k^2 >= log(4/delta) + N (w_max(0) + log 2) / 2,
    or None if the trace never gets there.
    """
    target = math.log(4.0 / delta) + num_links * (w_max_initial + math.log(2.0)) / 2.0
    cumulative = np.cumsum(1.0 / np.asarray(mixing_times, dtype=np.float64) ** 2)
    hits = np.flatnonzero(cumulative >= target)
    return int(hits[0]) + 1 if hits.size else None


def warmup_steps(model: ChainModel, mu0: np.ndarray, target: float) -> int:
    """Steps under fixed weights until sigma^t ||mu0 - pi||_{1/pi} <= target"""
    start = pi_norm_inv(np.asarray(mu0) - model.stationary, model.stationary)
    if start <= target:
        return 0
    sigma = slem(model).slem
    if sigma <= 0.0:
        return 1
    return int(math.ceil(math.log(start / target) / -math.log(sigma)))


def slow_weight_ramp(
    graph: ConflictGraph,
    start: np.ndarray,
    stop: np.ndarray,
    delta: float,
    chain: Literal["single", "multi"] = "single",
    decision_distribution: Mapping[Schedule, float] | None = None,
    min_step: float = 1e-9,
) -> list[np.ndarray]:
    """
    Weight vectors along the segment start -> stop, each step as long as
    possible while alpha_t * T_{t+1} <= delta / 16 holds exactly.

    alpha_t is the exact log-ratio drift of consecutive stationary laws and
    T_{t+1} the exact mixing time of the next kernel.
    """
    start = np.asarray(start, dtype=np.float64)
    stop = np.asarray(stop, dtype=np.float64)
    states = enumerate_independent_sets(graph)

    def build(weights: np.ndarray) -> ChainModel:
        if chain == "multi":
            return transition_matrix_multi(graph, weights, decision_distribution, states)
        return transition_matrix_single(graph, weights, states)

    current = build(start).stationary
    budget = delta / 16.0
    ramp: list[np.ndarray] = []
    s, h = 0.0, 1.0 / 16.0
    while s < 1.0:
        h = min(2.0 * h, 1.0 - s)
        while True:
            weights = start + (s + h) * (stop - start)
            model = build(weights)
            drift = ratio_alpha(model.stationary, current)
            if drift * slem(model).mixing_time <= budget:
                break
            h /= 2.0
            if h < min_step:
                raise DomainError(f"No admissible step below {min_step} at position {s:.6g} of the ramp")
        ramp.append(weights)
        current = model.stationary
        s = 1.0 if 1.0 - (s + h) < 1e-15 else s + h

    logger.debug("Slow ramp with %d steps for delta=%g", len(ramp), delta)
    return ramp
