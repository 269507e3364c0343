"""Control-slot mechanisms that pick the decision schedule m(t).

Sensing is ideal: every INTENT is heard by all neighbors within its mini-slot,
with no propagation delay and no message loss.
"""

from __future__ import annotations

import math
from enum import Enum
from itertools import permutations
from typing import Iterator

import numpy as np
from pydantic import BaseModel, Field

from src.errors import DomainError, EnumerationCapError
from src.network.conflict_graph import ConflictGraph, Schedule
from src.scheduling.glauber import SeededRng

BERNOULLI_ENUMERATION_CAP = 12
WINDOWED_ENUMERATION_CAP = 8

# A decision schedule is a Schedule that is independent by construction
DecisionSchedule = Schedule


class MacMechanism(str, Enum):
    """How links join the decision schedule"""
    BERNOULLI_HALF = "bernoulli_half"  # send INTENT w.p. 1/2, keep it if no neighbor sent
    WINDOWED = "windowed"  # uniform back-off over W control mini-slots
    EMPTY = "empty"  # degenerate: m(t) is always empty


class MacConfig(BaseModel):
    """Control-slot configuration"""

    mechanism: MacMechanism = Field(default=MacMechanism.WINDOWED)
    window: int = Field(default=32, ge=1, description="Back-off window W in control mini-slots")
    data_slot: float = Field(default=1.0, gt=0.0, description="Data slot length D")
    control_slot: float = Field(default=0.05, gt=0.0, description="Control slot length")


# ============================================================================
# Deterministic cores
# ============================================================================

def decision_from_sends(graph: ConflictGraph, sends: np.ndarray) -> np.ndarray:
    """A link is included iff it sent an INTENT and no neighbor did"""
    sends = np.asarray(sends, dtype=bool)
    heard = np.any(graph.adjacency & sends, axis=1)
    return sends & ~heard


def decision_from_backoffs(graph: ConflictGraph, backoffs: np.ndarray | list[int]) -> np.ndarray:
    """
    Trace the windowed mechanism for fixed back-off times.

    Mini-slots are processed in order. A link still listening at its own
    mini-slot broadcasts; it joins m(t) iff no neighbor broadcasts in the same
    mini-slot. Every broadcast, colliding or not, silences the neighbors whose
    mini-slot comes later.
    """
    order = sorted(range(graph.num_links), key=lambda link: backoffs[link])
    neighbor_masks = graph.neighbor_masks
    silenced = 0
    included = 0
    position = 0
    while position < len(order):
        slot = backoffs[order[position]]
        group = []
        while position < len(order) and backoffs[order[position]] == slot:
            group.append(order[position])
            position += 1

        talkers = [link for link in group if not silenced >> link & 1]
        talking = 0
        for link in talkers:
            talking |= 1 << link
        for link in talkers:
            if not talking & neighbor_masks[link]:
                included |= 1 << link
            silenced |= neighbor_masks[link]

    return np.array([bool(included >> link & 1) for link in range(graph.num_links)], dtype=bool)


# ============================================================================
# Random draws
# ============================================================================

def draw_decision(graph: ConflictGraph, config: MacConfig, rng: SeededRng) -> np.ndarray:
    """
    Decision schedule as a boolean vector (simulation fast path).

    BERNOULLI_HALF consumes N uniforms; WINDOWED consumes N integers in [0, W);
    EMPTY consumes nothing.
    """
    if config.mechanism is MacMechanism.BERNOULLI_HALF:
        return decision_from_sends(graph, rng.uniforms(graph.num_links) < 0.5)
    if config.mechanism is MacMechanism.WINDOWED:
        return decision_from_backoffs(graph, rng.integers(0, config.window, graph.num_links).tolist())
    return np.zeros(graph.num_links, dtype=bool)


def decision_bernoulli(graph: ConflictGraph, rng: SeededRng) -> DecisionSchedule:
    return Schedule.from_array(
        draw_decision(graph, MacConfig(mechanism=MacMechanism.BERNOULLI_HALF), rng)
    )


def decision_windowed(graph: ConflictGraph, window: int, rng: SeededRng) -> DecisionSchedule:
    if window < 1:
        raise DomainError(f"Back-off window must be at least 1, got {window}")
    return Schedule.from_array(
        draw_decision(graph, MacConfig(mechanism=MacMechanism.WINDOWED, window=window), rng)
    )


def decision_sampler(config: MacConfig):
    """Adapter with the ``(graph, rng) -> Schedule`` shape used by chain samplers"""
    def sample(graph: ConflictGraph, rng: SeededRng) -> DecisionSchedule:
        return Schedule.from_array(draw_decision(graph, config, rng))
    return sample


# ============================================================================
# Exact decision laws
# ============================================================================

def _set_partitions(items: list[int]) -> Iterator[list[list[int]]]:
    if not items:
        yield []
        return
    head, rest = items[0], items[1:]
    for partition in _set_partitions(rest):
        yield [[head], *partition]
        for index in range(len(partition)):
            yield [*partition[:index], [head, *partition[index]], *partition[index + 1:]]


def _accumulate(law: dict[DecisionSchedule, float], members: np.ndarray, probability: float) -> None:
    decision = Schedule.from_array(members)
    law[decision] = law.get(decision, 0.0) + probability


def enumerate_decision_distribution(
    graph: ConflictGraph,
    mechanism: MacMechanism,
    window: int = 32,
) -> dict[DecisionSchedule, float]:
    """
    Exact law alpha(m) of the decision schedule.

    BERNOULLI_HALF enumerates the 2^N send patterns (N <= 12). WINDOWED
    enumerates ordered set partitions of the links, i.e. the relative order of
    back-offs with ties; an ordering with k distinct values occurs with
    probability C(W, k) / W^N (N <= 8).
    """
    n = graph.num_links
    law: dict[DecisionSchedule, float] = {}

    if mechanism is MacMechanism.EMPTY:
        return {Schedule.empty(n): 1.0}

    if mechanism is MacMechanism.BERNOULLI_HALF:
        if n > BERNOULLI_ENUMERATION_CAP:
            raise EnumerationCapError(
                f"Send-pattern enumeration refused: N={n} exceeds {BERNOULLI_ENUMERATION_CAP}"
            )
        probability = 0.5 ** n
        for pattern in range(1 << n):
            sends = np.array([bool(pattern >> link & 1) for link in range(n)], dtype=bool)
            _accumulate(law, decision_from_sends(graph, sends), probability)
        return law

    if window < 1:
        raise DomainError(f"Back-off window must be at least 1, got {window}")
    if n > WINDOWED_ENUMERATION_CAP:
        raise EnumerationCapError(
            f"Back-off ordering enumeration refused: N={n} exceeds {WINDOWED_ENUMERATION_CAP}"
        )
    log_total = n * math.log(window)
    for partition in _set_partitions(list(range(n))):
        blocks = len(partition)
        if blocks > window:
            continue
        probability = math.exp(math.log(math.comb(window, blocks)) - log_total)
        for ordering in permutations(partition):
            backoffs = [0] * n
            for rank, block in enumerate(ordering):
                for link in block:
                    backoffs[link] = rank
            _accumulate(law, decision_from_backoffs(graph, backoffs), probability)
    return law


def alpha_min(decision_distribution: dict[DecisionSchedule, float]) -> float:
    """Smallest positive decision probability"""
    return min(p for p in decision_distribution.values() if p > 0.0)


def decision_coverage(
    graph: ConflictGraph,
    config: MacConfig,
    rng: SeededRng,
    draws: int,
) -> np.ndarray:
    """Which links appear in at least one of ``draws`` decision schedules"""
    seen = np.zeros(graph.num_links, dtype=bool)
    for _ in range(draws):
        seen |= draw_decision(graph, config, rng)
    return seen


def capacity_fraction(data_slot: float, control_slot: float) -> float:
    """D / (D + Wc): share of each slot spent on data"""
    if data_slot <= 0 or control_slot <= 0:
        raise DomainError(f"Slot lengths must be positive, got D={data_slot}, Wc={control_slot}")
    return data_slot / (data_slot + control_slot)
