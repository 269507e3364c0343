"""Single-site and multi-site Glauber dynamics over independent sets.

RNG consumption order is part of the contract: ``single_site_step`` draws the
link index first, then one uniform for the activation decision, and always
draws both. ``multi_site_step`` draws one uniform per link (N per step) whether
or not the link belongs to the decision schedule. Identical seeds therefore
give identical traces regardless of the chain's state.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import product
from typing import Literal, Mapping, Sequence

import numpy as np
from scipy.special import expit, logsumexp

from src.errors import DistributionError, InfeasibleScheduleError
from src.network.conflict_graph import (
    ConflictGraph,
    Schedule,
    enumerate_independent_sets,
    is_independent,
)

DISTRIBUTION_ATOL = 1e-12

ChainKind = Literal["single", "multi"]


# ============================================================================
# Randomness
# ============================================================================

class SeededRng:
    """
    numpy PCG64 stream built from a SeedSequence.

    ``spawn`` yields statistically independent child streams, so concurrent
    simulations never share a generator.
    """

    def __init__(self, seed: int | np.random.SeedSequence):
        if isinstance(seed, np.random.SeedSequence):
            self._sequence = seed
        else:
            self._sequence = np.random.SeedSequence(int(seed))
        self.seed = self._sequence.entropy
        self.generator = np.random.Generator(np.random.PCG64(self._sequence))

    def spawn(self, count: int) -> list[SeededRng]:
        return [SeededRng(child) for child in self._sequence.spawn(count)]

    def choose_link(self, num_links: int) -> int:
        """Uniform 1-based link id"""
        return int(self.generator.integers(num_links)) + 1

    def uniform(self) -> float:
        return float(self.generator.random())

    def uniforms(self, count: int) -> np.ndarray:
        return self.generator.random(count)

    def integers(self, low: int, high: int, size: int) -> np.ndarray:
        """Uniform integers in [low, high)"""
        return self.generator.integers(low, high, size=size)


# ============================================================================
# Chain state and steps
# ============================================================================

@dataclass
class ChainState:
    """Current schedule X(t) as a boolean vector (index = link - 1) and slot t"""

    active: np.ndarray
    slot: int = 0

    @classmethod
    def start(cls, graph: ConflictGraph, schedule: Schedule | None = None) -> ChainState:
        if schedule is None:
            return cls(active=np.zeros(graph.num_links, dtype=bool))
        if not is_independent(graph, schedule):
            raise InfeasibleScheduleError(f"Initial schedule {schedule!r} is not independent")
        return cls(active=schedule.to_array())

    @property
    def schedule(self) -> Schedule:
        return Schedule.from_array(self.active)

    @property
    def mask(self) -> int:
        return self.schedule.mask


def activation_probability(weight: float | np.ndarray) -> float | np.ndarray:
    """exp(w) / (1 + exp(w)), overflow-safe"""
    return expit(weight)


def single_site_step(
    graph: ConflictGraph,
    state: ChainState,
    weights: np.ndarray,
    rng: SeededRng,
) -> ChainState:
    """
    One update of the basic algorithm.

    A link i is chosen uniformly. If none of its neighbors is active it turns
    on with probability activation_probability(w_i) and off otherwise; if a
    neighbor is active it is off. Every other link keeps its state.
    """
    link = rng.choose_link(graph.num_links)
    draw = rng.uniform()
    index = link - 1

    active = state.active.copy()
    if np.any(active[graph.adjacency[index]]):
        active[index] = False
    else:
        active[index] = draw < activation_probability(weights[index])
    return ChainState(active=active, slot=state.slot + 1)


def _decision_array(graph: ConflictGraph, decision: Schedule | np.ndarray) -> np.ndarray:
    members = decision.to_array() if isinstance(decision, Schedule) else np.asarray(decision, dtype=bool)
    if members.shape != (graph.num_links,):
        raise InfeasibleScheduleError(
            f"Decision schedule over {members.shape[0]} links used with a {graph.num_links}-link graph"
        )
    if np.any(graph.adjacency[np.ix_(members, members)]):
        raise InfeasibleScheduleError(
            f"Decision schedule {Schedule.from_array(members)!r} is not an independent set"
        )
    return members


def multi_site_step(
    graph: ConflictGraph,
    state: ChainState,
    weights: np.ndarray,
    decision: Schedule | np.ndarray,
    rng: SeededRng,
) -> ChainState:
    """
    One update of the parallel Glauber dynamics.

    Every link of the decision schedule m(t) re-randomizes by the single-site
    rule, testing its neighbors against the previous schedule x(t-1); links
    outside m(t) are frozen. m(t) must be independent, so no two updated links
    are neighbors.
    """
    members = _decision_array(graph, decision)
    draws = rng.uniforms(graph.num_links)

    previous = state.active
    blocked = np.any(graph.adjacency & previous, axis=1)
    turn_on = ~blocked & (draws < activation_probability(weights))

    active = previous.copy()
    active[members] = turn_on[members]
    return ChainState(active=active, slot=state.slot + 1)


# ============================================================================
# Exact laws and kernels
# ============================================================================

def _log_weights(states: Sequence[Schedule], weights: np.ndarray) -> np.ndarray:
    return np.array(
        [float(np.sum(weights[schedule.to_array()])) for schedule in states],
        dtype=np.float64,
    )


def stationary_distribution(
    graph: ConflictGraph,
    weights: np.ndarray,
    states: Sequence[Schedule] | None = None,
) -> np.ndarray:
    """
    Product-form law pi(rho) = exp(sum_{i in rho} w_i) / Z over the canonical
    enumeration of independent sets (log-sum-exp normalized).
    """
    if states is None:
        states = enumerate_independent_sets(graph)
    log_weight = _log_weights(states, np.asarray(weights, dtype=np.float64))
    return np.exp(log_weight - logsumexp(log_weight))


@dataclass(frozen=True, eq=False)
class ChainModel:
    """Enumerated state space, exact kernel and stationary law of one chain"""

    graph: ConflictGraph
    weights: np.ndarray
    states: tuple[Schedule, ...]
    kernel: np.ndarray
    stationary: np.ndarray
    kind: ChainKind = "single"
    _index: dict[int, int] = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self) -> None:
        if not self._index:
            self._index.update({s.mask: i for i, s in enumerate(self.states)})

    @property
    def size(self) -> int:
        return len(self.states)

    def index_of(self, schedule: Schedule | int) -> int:
        mask = schedule if isinstance(schedule, int) else schedule.mask
        return self._index[mask]

    def row_sum_residual(self) -> float:
        return float(np.max(np.abs(self.kernel.sum(axis=1) - 1.0)))

    def detailed_balance_residual(self) -> float:
        """max |pi(X) P(X,Y) - pi(Y) P(Y,X)|"""
        flow = self.stationary[:, None] * self.kernel
        return float(np.max(np.abs(flow - flow.T)))

    def point_mass(self, schedule: Schedule | int) -> np.ndarray:
        mu = np.zeros(self.size)
        mu[self.index_of(schedule)] = 1.0
        return mu


def transition_matrix_single(
    graph: ConflictGraph,
    weights: np.ndarray,
    states: Sequence[Schedule] | None = None,
) -> ChainModel:
    """Exact kernel of single_site_step"""
    if states is None:
        states = enumerate_independent_sets(graph)
    weights = np.asarray(weights, dtype=np.float64)
    index = {s.mask: i for i, s in enumerate(states)}
    n = graph.num_links
    p_on = activation_probability(weights)

    kernel = np.zeros((len(states), len(states)))
    for row, schedule in enumerate(states):
        x = schedule.mask
        for link in range(n):
            bit = 1 << link
            if x & graph.neighbor_masks[link]:
                kernel[row, index[x & ~bit]] += 1.0 / n
                continue
            kernel[row, index[x | bit]] += p_on[link] / n
            kernel[row, index[x & ~bit]] += (1.0 - p_on[link]) / n

    return ChainModel(
        graph=graph,
        weights=weights,
        states=tuple(states),
        kernel=kernel,
        stationary=stationary_distribution(graph, weights, states),
        kind="single",
    )


def validate_decision_distribution(
    graph: ConflictGraph,
    decision_distribution: Mapping[Schedule, float],
) -> None:
    total = 0.0
    for decision, probability in decision_distribution.items():
        if probability < 0:
            raise DistributionError(f"Negative probability {probability} for {decision!r}")
        if not is_independent(graph, decision):
            raise DistributionError(f"Decision schedule {decision!r} is not an independent set")
        total += probability
    if abs(total - 1.0) > DISTRIBUTION_ATOL:
        raise DistributionError(f"Decision probabilities sum to {total!r}, not 1")


def transition_matrix_multi(
    graph: ConflictGraph,
    weights: np.ndarray,
    decision_distribution: Mapping[Schedule, float],
    states: Sequence[Schedule] | None = None,
) -> ChainModel:
    """
    Exact kernel of multi_site_step under a decision-schedule law alpha(m).

    P(X, Y) sums alpha(m) over decision schedules m containing X xor Y, times
    the per-site factors of the sites in m.
    """
    validate_decision_distribution(graph, decision_distribution)
    if states is None:
        states = enumerate_independent_sets(graph)
    weights = np.asarray(weights, dtype=np.float64)
    index = {s.mask: i for i, s in enumerate(states)}
    p_on = activation_probability(weights)

    kernel = np.zeros((len(states), len(states)))
    for row, schedule in enumerate(states):
        x = schedule.mask
        for decision, alpha in decision_distribution.items():
            if alpha == 0.0:
                continue
            sites = decision.links
            free = [l - 1 for l in sites if not x & graph.neighbor_masks[l - 1]]
            base = x & ~decision.mask
            for outcome in product((False, True), repeat=len(free)):
                y = base
                probability = alpha
                for site, on in zip(free, outcome):
                    if on:
                        y |= 1 << site
                        probability *= p_on[site]
                    else:
                        probability *= 1.0 - p_on[site]
                kernel[row, index[y]] += probability

    return ChainModel(
        graph=graph,
        weights=weights,
        states=tuple(states),
        kernel=kernel,
        stationary=stationary_distribution(graph, weights, states),
        kind="multi",
    )


# ============================================================================
# Sampling helpers and simple bounds
# ============================================================================

def sample_chain(
    graph: ConflictGraph,
    weights: np.ndarray,
    steps: int,
    rng: SeededRng,
    start: Schedule | None = None,
    decision_sampler=None,
) -> np.ndarray:
    """
    Run a chain under fixed weights and return the visited schedule masks.

    ``decision_sampler(graph, rng) -> Schedule`` switches to the multi-site
    chain; without it the single-site chain is used.
    """
    weights = np.asarray(weights, dtype=np.float64)
    state = ChainState.start(graph, start)
    powers = 1 << np.arange(graph.num_links, dtype=np.int64)
    masks = np.empty(steps, dtype=np.int64)
    for t in range(steps):
        if decision_sampler is None:
            state = single_site_step(graph, state, weights, rng)
        else:
            state = multi_site_step(graph, state, weights, decision_sampler(graph, rng), rng)
        masks[t] = int(powers[state.active].sum())
    return masks


def empirical_distribution(masks: np.ndarray, states: Sequence[Schedule]) -> np.ndarray:
    """Visit frequencies of ``masks`` over the canonical state order"""
    index = {s.mask: i for i, s in enumerate(states)}
    counts = np.zeros(len(states))
    values, hits = np.unique(masks, return_counts=True)
    for mask, hit in zip(values, hits):
        counts[index[int(mask)]] = hit
    return counts / counts.sum()


def stationary_floor(num_states: int, num_links: int, w_max: float) -> float:
    """Lower bound 1 / (|M| exp(N w_max)) on every stationary probability"""
    return float(np.exp(-np.log(num_states) - num_links * w_max))


def diagonal_floor(w_max: float) -> float:
    """Lower bound 1 / (1 + exp(w_max)) on the single-site kernel's diagonal"""
    return float(expit(-w_max))
