"""Self-check suites run by ``csma verify``.

Each suite instantiates the properties the scheduling theory promises on
instances small enough for exact enumeration, and reports every violated
check. The threshold suite compares the double-precision formulas against an
independent arbitrary-precision evaluation.
"""

from __future__ import annotations

import logging
import math
import time
from decimal import MAX_EMAX, MIN_EMIN, Context, Decimal, localcontext
from typing import Callable

import numpy as np
from pydantic import BaseModel, Field

from src.analysis.norms import drift_bound_holds, norm_dominates_tv, ratio_alpha, tv_distance
from src.analysis.propagation import fit_decay_rate, propagate_distribution, slow_weight_ramp, warmup_steps
from src.analysis.report import left_fixed_point
from src.analysis.spectral import cheeger_sandwich, conductance, gershgorin_floor, slem
from src.analysis.thresholds import b_threshold, q_threshold, t_star
from src.analysis.throughput import chi_bound, chi_set_mass, log_partition_function, schedule_weights
from src.network.conflict_graph import (
    ConflictGraph,
    Schedule,
    complete_graph,
    cycle_graph,
    enumerate_independent_sets,
    path_graph,
    random_graph,
    star_graph,
)
from src.scheduling.distributed_mac import MacConfig, MacMechanism, decision_sampler, enumerate_decision_distribution
from src.scheduling.glauber import (
    SeededRng,
    empirical_distribution,
    sample_chain,
    stationary_distribution,
    transition_matrix_multi,
    transition_matrix_single,
)
from src.scheduling.weights import (
    CONCAVE_KINDS,
    GROWTH_KINDS,
    WeightConfig,
    WeightFunctionSpec,
    WeightKind,
    effective_weights,
    f_array,
    slow_variation_threshold,
)
from src.sim.metrics import chi_fraction
from src.sim.network_sim import ArrivalConfig, SimConfig, run_basic

logger = logging.getLogger(__name__)

FIXED_POINT_TOL = 1e-9
SAMPLING_TV = 0.01
SAMPLING_STEPS = 1_000_000
DECAY_RTOL = 0.05
THRESHOLD_RTOL = 1e-10
CORPUS_SEED = 20240


class SuiteResult(BaseModel):
    name: str
    passed: bool
    checks: int
    failures: list[str] = Field(default_factory=list)
    details: dict = Field(default_factory=dict)
    seconds: float = 0.0


class VerifyReport(BaseModel):
    passed: bool
    suites: list[SuiteResult]


class _Suite:
    """Collects checks for one suite"""

    def __init__(self, name: str):
        self.name = name
        self.checks = 0
        self.failures: list[str] = []
        self.details: dict = {}

    def check(self, ok: bool, message: str) -> None:
        self.checks += 1
        if not ok:
            self.failures.append(message)

    def result(self, seconds: float) -> SuiteResult:
        return SuiteResult(
            name=self.name,
            passed=not self.failures,
            checks=self.checks,
            failures=self.failures,
            details=self.details,
            seconds=seconds,
        )


# ============================================================================
# Corpus
# ============================================================================

def graph_corpus(max_links: int = 10) -> list[ConflictGraph]:
    """Paths, cycles, stars, cliques and seeded random graphs with at most ``max_links`` links"""
    graphs: list[ConflictGraph] = []
    graphs += [path_graph(n) for n in range(1, 7)]
    graphs += [cycle_graph(n) for n in range(3, 7)]
    graphs += [star_graph(leaves) for leaves in range(2, 6)]
    graphs += [complete_graph(n) for n in range(2, 5)]
    graphs += [random_graph(n, 0.4, seed) for n in range(4, 11) for seed in range(3)]
    return [g for g in graphs if g.num_links <= max_links]


# ============================================================================
# Suites
# ============================================================================

def suite_stationary_single(steps: int = SAMPLING_STEPS) -> _Suite:
    suite = _Suite("stationary_single")
    rng = np.random.default_rng(CORPUS_SEED)
    for graph in graph_corpus(10):
        weights = rng.uniform(0.0, 2.0, graph.num_links)
        model = transition_matrix_single(graph, weights)
        error = float(np.max(np.abs(left_fixed_point(model.kernel) - model.stationary)))
        suite.check(error <= FIXED_POINT_TOL, f"{graph!r}: fixed point differs from product form by {error:.3e}")

    k2 = complete_graph(2)
    weights = np.array([0.5, 1.0])
    states = enumerate_independent_sets(k2)
    masks = sample_chain(k2, weights, steps, SeededRng(CORPUS_SEED))
    tv = tv_distance(empirical_distribution(masks, states), stationary_distribution(k2, weights, states))
    suite.details["k2_sampling_tv"] = tv
    suite.check(tv <= SAMPLING_TV, f"K2 single-site sampling TV {tv:.4f} > {SAMPLING_TV}")
    return suite


def suite_stationary_multi(steps: int = SAMPLING_STEPS) -> _Suite:
    suite = _Suite("stationary_multi")
    rng = np.random.default_rng(CORPUS_SEED + 1)
    for graph in graph_corpus(8):
        weights = rng.uniform(0.0, 2.0, graph.num_links)
        law = enumerate_decision_distribution(graph, MacMechanism.BERNOULLI_HALF)
        model = transition_matrix_multi(graph, weights, law)
        error = float(np.max(np.abs(left_fixed_point(model.kernel) - model.stationary)))
        suite.check(error <= FIXED_POINT_TOL, f"{graph!r} (bernoulli): fixed point off by {error:.3e}")
        if graph.num_links <= 5:
            law = enumerate_decision_distribution(graph, MacMechanism.WINDOWED, window=4)
            model = transition_matrix_multi(graph, weights, law)
            error = float(np.max(np.abs(left_fixed_point(model.kernel) - model.stationary)))
            suite.check(error <= FIXED_POINT_TOL, f"{graph!r} (windowed): fixed point off by {error:.3e}")

    k2 = complete_graph(2)
    weights = np.array([0.5, 1.0])
    states = enumerate_independent_sets(k2)
    sampler = decision_sampler(MacConfig(mechanism=MacMechanism.BERNOULLI_HALF))
    masks = sample_chain(k2, weights, steps, SeededRng(CORPUS_SEED + 1), decision_sampler=sampler)
    tv = tv_distance(empirical_distribution(masks, states), stationary_distribution(k2, weights, states))
    suite.details["k2_sampling_tv"] = tv
    suite.check(tv <= SAMPLING_TV, f"K2 multi-site sampling TV {tv:.4f} > {SAMPLING_TV}")
    return suite


def suite_mixing_bounds(instances: int = 200) -> _Suite:
    suite = _Suite("mixing_bounds")
    rng = np.random.default_rng(CORPUS_SEED + 2)
    worst = -math.inf
    for instance in range(instances):
        n = int(rng.integers(1, 7))
        graph = random_graph(n, float(rng.uniform(0.2, 0.8)), seed=instance)
        weights = rng.uniform(0.0, 2.0, n)
        single = slem(transition_matrix_single(graph, weights))
        suite.check(single.within_bound, f"instance {instance}: single-site T={single.mixing_time:.4g} above bound")
        law = enumerate_decision_distribution(graph, MacMechanism.BERNOULLI_HALF)
        multi = slem(transition_matrix_multi(graph, weights, law))
        suite.check(multi.within_bound, f"instance {instance}: multi-site T={multi.mixing_time:.4g} above bound")
        worst = max(worst, math.log(single.mixing_time) - single.bound.log)
    suite.details["max_log_ratio_to_bound"] = worst
    return suite


def suite_conductance() -> _Suite:
    suite = _Suite("conductance")
    rng = np.random.default_rng(CORPUS_SEED + 3)
    for graph in graph_corpus(10):
        states = enumerate_independent_sets(graph)
        if len(states) > 22:
            continue
        weights = rng.uniform(0.0, 2.0, graph.num_links)
        models = [transition_matrix_single(graph, weights, states)]
        if graph.num_links <= 4:
            law = enumerate_decision_distribution(graph, MacMechanism.BERNOULLI_HALF)
            models.append(transition_matrix_multi(graph, weights, law, states))
        for model in models:
            report = slem(model)
            phi, _ = conductance(model)
            suite.check(
                cheeger_sandwich(phi, report.lambda2),
                f"{graph!r} ({model.kind}): phi={phi:.6g}, lambda2={report.lambda2:.6g} outside the sandwich",
            )
            floor = gershgorin_floor(model)
            suite.check(
                report.lambda_min >= floor - 1e-12,
                f"{graph!r} ({model.kind}): lambda_min={report.lambda_min:.6g} below {floor:.6g}",
            )
    return suite


def suite_decay_rate() -> _Suite:
    suite = _Suite("decay_rate")
    cases = [
        (complete_graph(2), np.array([2.0, 2.0]), Schedule.of(2, [1])),
        (path_graph(3), np.array([1.0, 1.0, 1.0]), Schedule.of(3, [1, 3])),
    ]
    for graph, weights, start in cases:
        result = propagate_distribution(graph, [weights] * 200, start)
        sigma = slem(transition_matrix_single(graph, weights)).slem
        rate = fit_decay_rate(result.tv, 10, 200)
        suite.details[repr(graph)] = {"sigma": sigma, "fitted": rate}
        suite.check(
            abs(rate - sigma) <= DECAY_RTOL * sigma,
            f"{graph!r}: fitted rate {rate:.6g} vs sigma {sigma:.6g}",
        )
    return suite


def suite_adiabatic(delta: float = 0.2) -> _Suite:
    suite = _Suite("adiabatic")
    graph = complete_graph(2)
    start = np.zeros(2)
    stop = np.array([3.0, 0.0])
    states = enumerate_independent_sets(graph)
    initial = transition_matrix_single(graph, start, states)
    mu0 = initial.point_mass(Schedule.empty(2))
    warmup = warmup_steps(initial, mu0, delta / 8.0)

    slow = [start] * warmup + slow_weight_ramp(graph, start, stop, delta)
    slow_tv = propagate_distribution(graph, slow, mu0).tv[warmup:]
    fast = [start] * warmup + list(np.linspace(start, stop, 4)[1:])
    fast_tv = propagate_distribution(graph, fast, mu0).tv[warmup:]

    suite.details.update(
        warmup=warmup,
        slow_steps=len(slow) - warmup,
        slow_max_tv=float(slow_tv.max()),
        fast_max_tv=float(fast_tv.max()),
    )
    suite.check(float(slow_tv.max()) <= delta / 4.0, f"slow ramp reached tv {slow_tv.max():.4f} > {delta / 4}")
    suite.check(float(fast_tv.max()) > delta / 4.0, f"fast ramp stayed within tv {fast_tv.max():.4f}")
    return suite


def suite_norms(instances: int = 200) -> _Suite:
    suite = _Suite("norms")
    rng = np.random.default_rng(CORPUS_SEED + 4)
    graph = path_graph(4)
    states = enumerate_independent_sets(graph)
    for _ in range(instances):
        weights = rng.uniform(0.0, 2.0, graph.num_links)
        nudged = weights + rng.uniform(-0.1, 0.1, graph.num_links)
        pi_now = stationary_distribution(graph, weights, states)
        pi_next = stationary_distribution(graph, nudged, states)
        alpha = ratio_alpha(pi_next, pi_now)
        if alpha < 1.0:
            suite.check(drift_bound_holds(pi_next, pi_now, alpha), f"drift bound failed at alpha={alpha:.4g}")
        mu = rng.dirichlet(np.ones(len(states)))
        suite.check(norm_dominates_tv(mu, pi_now), "1/pi norm below twice the TV distance")
    return suite


def suite_slow_variation() -> _Suite:
    suite = _Suite("slow_variation")
    specs = [
        WeightFunctionSpec(kind=WeightKind.LOG_OVER_LOGLOG),
        WeightFunctionSpec(kind=WeightKind.LOG_POWER, theta=0.5),
        WeightFunctionSpec(kind=WeightKind.LOGLOG),
        WeightFunctionSpec(kind=WeightKind.LINEAR),
        WeightFunctionSpec(kind=WeightKind.SQRT),
    ]
    for spec in specs:
        threshold = slow_variation_threshold(spec, m1=5, m2=5, epsilon=0.1)
        suite.details[spec.label] = {"threshold": threshold, "concave_guarantee": spec.kind in CONCAVE_KINDS}
        if spec.kind in GROWTH_KINDS:
            suite.check(threshold is not None, f"{spec.label}: no sandwich threshold found")
    return suite


def suite_chi_bound(delta: float = 0.2, horizon: int = 50_000) -> _Suite:
    suite = _Suite("chi_bound")
    cases = [
        (complete_graph(2), [60, 20]),
        (path_graph(3), [50, 40, 10]),
        (star_graph(3), [80, 30, 30, 30]),
        (cycle_graph(4), [90, 10, 70, 40]),
    ]
    spec = WeightFunctionSpec(kind=WeightKind.LOG_OVER_LOGLOG)
    for graph, queues in cases:
        config = WeightConfig(spec=spec, epsilon=0.2, num_links=graph.num_links)
        states = enumerate_independent_sets(graph)
        raw = f_array(spec, np.asarray(queues))
        effective = effective_weights(config, np.asarray(queues))
        pi = stationary_distribution(graph, effective, states)
        w_star = float(schedule_weights(states, raw).max())
        floor = float(effective.max()) * config.epsilon / (2.0 * graph.num_links)

        mass = chi_set_mass(states, pi, raw, config.epsilon)
        bound = chi_bound(graph.num_links, floor, w_star, config.epsilon)
        suite.check(mass <= bound, f"{graph!r}: pi(chi)={mass:.4g} above {bound:.4g}")
        suite.check(log_partition_function(states, effective) > w_star, f"{graph!r}: Z <= exp(w*)")

        trace = run_basic(
            graph,
            config,
            ArrivalConfig(rates=[0.0] * graph.num_links),
            SimConfig(horizon=horizon, seed=CORPUS_SEED, frozen=True, q0=queues, mws_every=1, record_every=horizon),
        )
        fraction = chi_fraction(trace, config.epsilon)
        suite.details[repr(graph)] = {"pi_chi": mass, "bound": bound, "empirical": fraction}
        suite.check(fraction <= mass + delta / 2.0, f"{graph!r}: empirical chi fraction {fraction:.4f} above {mass + delta / 2:.4f}")
    return suite


# ---------------------------------------------------------------------------
# Arbitrary-precision threshold evaluator
# ---------------------------------------------------------------------------

def _decimal_context() -> Context:
    return Context(prec=60, Emax=MAX_EMAX, Emin=MIN_EMIN)


def _log1p_f_inverse_decimal(kind: WeightKind, theta: Decimal, w: Decimal) -> Decimal:
    """L = log(1 + q) with f(q) = w"""
    if kind is WeightKind.LOG_POWER:
        return w ** (Decimal(1) / (Decimal(1) - theta))
    e = Decimal(1).exp()
    L = w
    for _ in range(2000):
        nxt = w * (e + L).ln()
        if abs(nxt - L) <= abs(nxt) * Decimal("1e-55"):
            return nxt
        L = nxt
    return L


def reference_thresholds(
    num_links: int,
    epsilon: float,
    delta: float,
    kind: WeightKind,
    theta: float = 0.5,
) -> tuple[float, float, float]:
    """log log of (1 + q_th), t* and (1 + B), evaluated in 60-digit decimal arithmetic"""
    with localcontext(_decimal_context()):
        n = Decimal(num_links)
        eps = Decimal(repr(epsilon))
        dlt = Decimal(repr(delta))
        th = Decimal(repr(theta))
        e = Decimal(1).exp()
        two = Decimal(2)

        a = (Decimal(64) * n * Decimal(16) ** num_links / dlt).ln()
        y = Decimal(16) * n * n / eps
        scale = two * n / eps
        if kind is WeightKind.LOG_POWER:
            L = max(scale * a, scale * y ** (Decimal(1) / th)) ** (Decimal(1) / (Decimal(1) - th))
        else:
            b = (y.exp() - e) / y
            L = _log1p_f_inverse_decimal(kind, th, scale * max(a, b))

        c = eps / (two * n)
        log_two_plus = L if L > 200 else L + (Decimal(1) + (-L).exp()).ln()
        inner = (Decimal(4) / dlt).ln() + n / two * (two.ln() + L)
        log_t = (c * log_two_plus + n * Decimal(16).ln() + inner.ln()) / (Decimal(1) - c)

        high, low = max(L, log_t), min(L, log_t)
        first = high + (Decimal(1) + (low - high).exp()).ln() if high - low < 1000 else high
        argument = (n * two.ln() + (two / dlt).ln()) / (eps / two)
        second = _log1p_f_inverse_decimal(kind, th, argument)
        return float(L.ln()), float(log_t.ln()), float(max(first, second).ln())


def suite_thresholds() -> _Suite:
    suite = _Suite("thresholds")
    grid = [
        (n, eps, dlt, spec)
        for n in (1, 2, 4, 8, 24)
        for eps in (0.1, 0.2, 0.5)
        for dlt in (0.05, 0.1)
        for spec in (
            WeightFunctionSpec(kind=WeightKind.LOG_OVER_LOGLOG),
            WeightFunctionSpec(kind=WeightKind.LOG_POWER, theta=0.3),
            WeightFunctionSpec(kind=WeightKind.LOG_POWER, theta=0.5),
            WeightFunctionSpec(kind=WeightKind.LOG_POWER, theta=0.7),
        )
    ]
    worst = 0.0
    for n, eps, dlt, spec in grid:
        q_th = q_threshold(n, eps, dlt, spec)
        t = t_star(n, eps, dlt, spec.theta, q_th)
        b = b_threshold(n, eps, dlt, spec, q_th, t)
        reference = reference_thresholds(n, eps, dlt, spec.kind, spec.theta)
        for name, ours, theirs in zip(("q_th", "t*", "B"), (q_th, t, b), reference):
            error = abs(ours.log_log_value - theirs) / max(abs(theirs), 1e-300)
            worst = max(worst, error)
            suite.check(
                error <= THRESHOLD_RTOL,
                f"{name} for N={n} eps={eps} delta={dlt} {spec.label}: {ours.log_log_value!r} vs {theirs!r}",
            )
    suite.details["max_relative_error"] = worst
    return suite


SUITES: dict[str, Callable[[], _Suite]] = {
    "stationary_single": suite_stationary_single,
    "stationary_multi": suite_stationary_multi,
    "mixing_bounds": suite_mixing_bounds,
    "conductance": suite_conductance,
    "decay_rate": suite_decay_rate,
    "adiabatic": suite_adiabatic,
    "norms": suite_norms,
    "slow_variation": suite_slow_variation,
    "chi_bound": suite_chi_bound,
    "thresholds": suite_thresholds,
}


def run_suites(names: list[str] | None = None) -> VerifyReport:
    """Run the named suites (all by default); an exception counts as a failed suite"""
    results: list[SuiteResult] = []
    for name in names or list(SUITES):
        started = time.perf_counter()
        try:
            result = SUITES[name]().result(time.perf_counter() - started)
        except Exception as e:
            logger.exception("Suite %s raised", name)
            result = SuiteResult(
                name=name,
                passed=False,
                checks=0,
                failures=[f"{type(e).__name__}: {e}"],
                seconds=time.perf_counter() - started,
            )
        logger.info("%s: %s (%d checks, %.1fs)", name, "pass" if result.passed else "FAIL", result.checks, result.seconds)
        results.append(result)
    return VerifyReport(passed=all(r.passed for r in results), suites=results)
