"""Tests for the slotted queueing simulation, the max-weight oracle and trace export"""

from unittest.mock import patch

import numpy as np
import pandas as pd
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from src.errors import (
    ConfigError,
    DomainError,
    EnumerationCapError,
    InfeasibleScheduleError,
    MissingOracleError,
)
from src.network.conflict_graph import (
    ConflictGraph,
    Schedule,
    enumerate_independent_sets,
    random_graph,
)
from src.scheduling.distributed_mac import MacConfig, MacMechanism
from src.scheduling.glauber import SeededRng, empirical_distribution, stationary_distribution
from src.scheduling.weights import WeightConfig, WeightFunctionSpec, WeightKind
from src.sim.metrics import chi_fraction, is_bounded, stability_metrics, window_average
from src.sim.mws import mws_oracle
from src.sim.network_sim import (
    ArrivalComponent,
    ArrivalConfig,
    SimConfig,
    expand_arrivals,
    queue_update,
    run_basic,
    run_distributed,
    sample_arrivals,
)
from src.sim.trace_io import (
    read_summary_json,
    read_trace_csv,
    write_avg_queue_csv,
    write_delay_csv,
    write_summary_json,
    write_trace_csv,
)


def _k2_setup(kind=WeightKind.LOG_OVER_LOGLOG):
    weights = WeightConfig(spec=WeightFunctionSpec(kind=kind), epsilon=0.2, num_links=2)
    arrivals = ArrivalConfig(rates=[0.2, 0.2])
    return weights, arrivals


class TestArrivals:
    """Tests for arrival-rate configuration"""

    def test_grid_rates(self, grid):
        components = [
            ArrivalComponent(links=list(grid.maximal_schedules[label].links), coefficient=c)
            for label, c in zip(["M1", "M2", "M3", "M4"], [0.2, 0.3, 0.2, 0.3])
        ]
        rates = expand_arrivals(ArrivalConfig(rho=0.8, components=components), grid.graph)
        assert rates[0] == pytest.approx(0.32)
        assert rates[3] == pytest.approx(0.48)
        assert np.all(rates < 1.0)

    def test_explicit_rates(self, k2):
        assert expand_arrivals(ArrivalConfig(rates=[0.1, 0.4]), k2).tolist() == [0.1, 0.4]

    def test_rate_count(self, k2):
        with pytest.raises(ConfigError):
            expand_arrivals(ArrivalConfig(rates=[0.1]), k2)

    def test_rate_range(self, k2):
        with pytest.raises(DomainError):
            expand_arrivals(ArrivalConfig(rates=[0.1, 1.0]), k2)

    def test_dependent_component(self, k2):
        config = ArrivalConfig(rho=0.5, components=[ArrivalComponent(links=[1, 2], coefficient=1.0)])
        with pytest.raises(InfeasibleScheduleError):
            expand_arrivals(config, k2)

    def test_exactly_one_form(self):
        with pytest.raises(ValueError):
            ArrivalConfig(rates=[0.1], rho=0.5, components=[ArrivalComponent(links=[1], coefficient=1.0)])
        with pytest.raises(ValueError):
            ArrivalConfig()

    def test_coefficients_sum_to_one(self):
        with pytest.raises(ValueError):
            ArrivalConfig(rho=0.5, components=[ArrivalComponent(links=[1], coefficient=0.7)])

    def test_rho_below_one(self):
        with pytest.raises(ValueError):
            ArrivalConfig(rho=1.0, components=[ArrivalComponent(links=[1], coefficient=1.0)])

    def test_sampling_mean(self):
        rng = SeededRng(0)
        rates = np.array([0.0, 0.3, 0.9])
        total = sum(sample_arrivals(rates, rng) for _ in range(20_000))
        assert total[0] == 0
        assert total[1] / 20_000 == pytest.approx(0.3, abs=0.02)
        assert total[2] / 20_000 == pytest.approx(0.9, abs=0.02)


class TestQueueUpdate:
    def test_update(self):
        queues = np.array([0, 2, 1])
        updated = queue_update(queues, np.array([True, True, False]), np.array([1, 0, 1]))
        assert updated.tolist() == [1, 1, 2]

    def test_schedule_argument(self):
        updated = queue_update(np.array([3, 3]), Schedule.of(2, [2]), np.array([0, 0]))
        assert updated.tolist() == [3, 2]


class TestMaxWeightOracle:
    """Tests for the exact max-weight independent set"""

    def test_path(self, path3):
        schedule, weight = mws_oracle(path3, np.array([1.0, 3.0, 1.0]))
        assert schedule == Schedule.of(3, [2])
        assert weight == 3.0

    def test_tie_takes_smallest_mask(self, path3):
        schedule, weight = mws_oracle(path3, np.array([1.0, 2.0, 1.0]))
        assert schedule == Schedule.of(3, [2])
        assert weight == 2.0

    def test_grid_all_ones(self, grid):
        schedule, weight = mws_oracle(grid.graph, np.ones(24))
        assert weight == 8.0
        assert len(schedule) == 8

    def test_zero_weights(self, path3):
        schedule, weight = mws_oracle(path3, np.zeros(3))
        assert schedule == Schedule.empty(3)
        assert weight == 0.0

    def test_negative_weights(self, path3):
        with pytest.raises(DomainError):
            mws_oracle(path3, np.array([1.0, -1.0, 1.0]))

    def test_cap(self):
        with pytest.raises(EnumerationCapError):
            mws_oracle(ConflictGraph(40, {}), np.ones(40))

    @settings(max_examples=30, deadline=None)
    @given(n=st.integers(1, 10), p=st.floats(0.1, 0.9), seed=st.integers(0, 1000))
    def test_matches_brute_force(self, n, p, seed):
        graph = random_graph(n, p, seed)
        weights = np.random.default_rng(seed).uniform(0.0, 5.0, n)
        _, weight = mws_oracle(graph, weights)
        best = max(float(weights[s.to_array()].sum()) for s in enumerate_independent_sets(graph))
        assert weight == pytest.approx(best)


class TestSimulation:
    """Tests for run_basic and run_distributed"""

    def test_deterministic(self, k2):
        weights, arrivals = _k2_setup()
        sim = SimConfig(horizon=500, seed=4)
        first = run_basic(k2, weights, arrivals, sim)
        second = run_basic(k2, weights, arrivals, sim)
        assert first.avg_queue.tolist() == second.avg_queue.tolist()
        assert first.schedule_masks.tolist() == second.schedule_masks.tolist()

    def test_same_arrivals_across_weight_kinds(self, k2):
        sim = SimConfig(horizon=300, seed=9, record_every=1)
        first = run_basic(k2, *_k2_setup(WeightKind.LOG_OVER_LOGLOG), sim)
        second = run_basic(k2, *_k2_setup(WeightKind.LINEAR), sim)
        assert [r.arrivals.tolist() for r in first.records] == [r.arrivals.tolist() for r in second.records]

    def test_schedules_stay_feasible(self, path3):
        weights = WeightConfig(num_links=3)
        sim = SimConfig(horizon=2000, seed=1)
        trace = run_distributed(path3, weights, ArrivalConfig(rates=[0.2, 0.2, 0.2]), MacConfig(window=4), sim)
        independent = {s.mask for s in enumerate_independent_sets(path3)}
        assert set(trace.schedule_masks.tolist()) <= independent
        assert trace.mode == "distributed"
        assert all(r.decision is not None for r in trace.records)

    def test_empty_mac_never_serves(self, path3):
        weights = WeightConfig(num_links=3)
        sim = SimConfig(horizon=400, seed=2)
        trace = run_distributed(
            path3, weights, ArrivalConfig(rates=[0.3, 0.3, 0.3]), MacConfig(mechanism=MacMechanism.EMPTY), sim
        )
        assert trace.departures.sum() == 0
        assert np.all(np.diff(trace.avg_queue) >= 0)
        assert trace.final_queues.sum() > 0

    def test_frozen_keeps_queues(self, k2):
        weights, arrivals = _k2_setup()
        sim = SimConfig(horizon=200, seed=3, frozen=True, q0=[5, 7])
        trace = run_basic(k2, weights, arrivals, sim)
        assert trace.final_queues.tolist() == [5, 7]
        assert trace.departures.sum() == 0

    def test_frozen_with_fixed_weights(self, k2):
        weights, arrivals = _k2_setup()
        sim = SimConfig(horizon=50, seed=3, frozen=True, fixed_weights=[0.5, 1.0], oracle=False)
        trace = run_basic(k2, weights, arrivals, sim)
        assert trace.final_queues.tolist() == [0, 0]
        with pytest.raises(ConfigError):
            run_basic(k2, weights, arrivals, sim.model_copy(update={"fixed_weights": [0.5]}))

    @pytest.mark.slow
    @pytest.mark.parametrize("mode", ["basic", "distributed"])
    def test_frozen_visits_match_product_form(self, k2, mode):
        """With w~ held fixed the schedule frequencies settle on exp(w(X)) / Z"""
        fixed = np.array([0.5, 1.0])
        weights, arrivals = _k2_setup()
        sim = SimConfig(
            horizon=300_000, seed=11, frozen=True, fixed_weights=fixed.tolist(), oracle=False, record_every=300_000
        )
        if mode == "basic":
            trace = run_basic(k2, weights, arrivals, sim)
        else:
            trace = run_distributed(k2, weights, arrivals, MacConfig(mechanism=MacMechanism.BERNOULLI_HALF), sim)
        states = enumerate_independent_sets(k2)
        empirical = empirical_distribution(trace.schedule_masks, states)
        pi = stationary_distribution(k2, fixed, states)
        assert 0.5 * np.abs(empirical - pi).sum() < 0.01

    def test_light_load_is_stable(self, k2):
        weights, arrivals = _k2_setup()
        trace = run_basic(k2, weights, arrivals, SimConfig(horizon=20_000, seed=0, oracle=False))
        metrics = stability_metrics(trace)
        assert metrics.time_avg_queue < 20.0

    def test_recording_cadence(self, k2):
        weights, arrivals = _k2_setup()
        trace = run_basic(k2, weights, arrivals, SimConfig(horizon=95, record_every=10, mws_every=25))
        assert [r.slot for r in trace.records] == [10, 20, 30, 40, 50, 60, 70, 80, 90, 95]
        assert trace.oracle_slots == [25, 50, 75]
        assert trace.horizon == 95

    def test_weight_config_size_mismatch(self, k2):
        with pytest.raises(ConfigError):
            run_basic(k2, WeightConfig(num_links=3), ArrivalConfig(rates=[0.1, 0.1]), SimConfig(horizon=5))

    def test_bad_initial_queues(self, k2):
        weights, arrivals = _k2_setup()
        with pytest.raises(ConfigError):
            run_basic(k2, weights, arrivals, SimConfig(horizon=5, q0=[1, 2, 3]))

    @patch("src.sim.network_sim.get_settings")
    def test_mws_every_from_settings(self, mock_get_settings, k2, mock_settings):
        mock_settings.mws_every = 7
        mock_get_settings.return_value = mock_settings
        weights, arrivals = _k2_setup()
        trace = run_basic(k2, weights, arrivals, SimConfig(horizon=21))
        assert trace.oracle_slots == [7, 14, 21]


class TestMetrics:
    """Tests for stability summaries"""

    def test_running_average(self, k2):
        weights, arrivals = _k2_setup()
        trace = run_basic(k2, weights, arrivals, SimConfig(horizon=300, seed=5))
        metrics = stability_metrics(trace)
        assert metrics.running_avg_queue[-1] == pytest.approx(metrics.time_avg_queue)
        assert metrics.max_queue == trace.max_queue.max()

    def test_chi_fraction_needs_oracle(self, k2):
        weights, arrivals = _k2_setup()
        trace = run_basic(k2, weights, arrivals, SimConfig(horizon=50, oracle=False))
        with pytest.raises(MissingOracleError):
            chi_fraction(trace, 0.2)

    def test_chi_fraction_range(self, k2):
        weights, arrivals = _k2_setup()
        trace = run_basic(k2, weights, arrivals, SimConfig(horizon=2000, mws_every=10))
        assert 0.0 <= chi_fraction(trace, 0.2) <= 1.0

    def test_window_average(self):
        series = np.arange(10, dtype=float)
        assert window_average(series, 0.0, 0.5) == pytest.approx(2.0)
        with pytest.raises(DomainError):
            window_average(series, 0.5, 0.5)

    def test_is_bounded(self):
        assert is_bounded(np.full(1000, 3.0))
        assert not is_bounded(np.arange(1000, dtype=float) ** 2)


class TestTraceExport:
    """Tests for CSV and JSON output"""

    def test_trace_csv(self, k2, tmp_path):
        weights, arrivals = _k2_setup()
        trace = run_basic(k2, weights, arrivals, SimConfig(horizon=40, record_every=10, mws_every=20))
        frame = read_trace_csv(write_trace_csv(trace, tmp_path / "run" / "trace.csv"))
        assert list(frame.columns) == ["t", "q1", "q2", "X", "achieved_w", "w_star"]
        assert frame["t"].tolist() == [10, 20, 30, 40]
        assert frame["w_star"].isna().tolist() == [True, False, True, False]

    def test_avg_queue_csv(self, k2, tmp_path):
        weights, arrivals = _k2_setup()
        trace = run_basic(k2, weights, arrivals, SimConfig(horizon=30, record_every=10))
        frame = pd.read_csv(write_avg_queue_csv(trace, tmp_path / "avg_queue.csv"))
        assert frame["slot"].tolist() == [10, 20, 30]
        assert frame["avg_queue"].tolist() == pytest.approx(trace.avg_queue[[9, 19, 29]].tolist())

    def test_delay_csv_averages_seeds(self, tmp_path):
        rows = [
            {"rho": 0.5, "kind": "loglog", "time_avg_queue": 1.0},
            {"rho": 0.5, "kind": "loglog", "time_avg_queue": 3.0},
            {"rho": 0.6, "kind": "loglog", "time_avg_queue": 5.0},
        ]
        frame = pd.read_csv(write_delay_csv(rows, tmp_path / "delay.csv"))
        assert frame["time_avg_queue"].tolist() == [2.0, 5.0]

    def test_empty_delay_csv(self, tmp_path):
        frame = pd.read_csv(write_delay_csv([], tmp_path / "delay.csv"))
        assert list(frame.columns) == ["rho", "kind", "time_avg_queue"]

    def test_summary_json(self, tmp_path):
        path = write_summary_json({"completed": 2, "failed": 0}, tmp_path / "summary.json")
        assert read_summary_json(path) == {"completed": 2, "failed": 0}
