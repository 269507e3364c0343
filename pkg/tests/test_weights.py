"""Tests for weight functions, inverses and the w_min floor"""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from src.errors import DomainError
from src.scheduling.weights import (
    CONCAVE_KINDS,
    WeightConfig,
    WeightFunctionSpec,
    WeightKind,
    effective_weight,
    effective_weights,
    f,
    f_array,
    f_inverse,
    f_prime,
    g,
    log1p_exact,
    slow_variation_sandwich,
    slow_variation_threshold,
    log1p_f_inverse,
    log_log1p_f_inverse,
    small_backlog_condition,
    w_min,
)

ALL_SPECS = [
    WeightFunctionSpec(kind=WeightKind.LOG_OVER_LOGLOG),
    WeightFunctionSpec(kind=WeightKind.LOG_POWER, theta=0.3),
    WeightFunctionSpec(kind=WeightKind.LOG_POWER, theta=0.5),
    WeightFunctionSpec(kind=WeightKind.LOG_POWER, theta=0.7),
    WeightFunctionSpec(kind=WeightKind.LOGLOG),
    WeightFunctionSpec(kind=WeightKind.LINEAR),
    WeightFunctionSpec(kind=WeightKind.SQRT),
]
CONCAVE_SPECS = [spec for spec in ALL_SPECS if spec.kind in CONCAVE_KINDS]
HALF_POWER = WeightFunctionSpec(kind=WeightKind.LOG_POWER, theta=0.5)


class TestEvaluation:
    """Tests for f and f'"""

    def test_log_power_half(self):
        q = math.exp(4.0) - 1.0
        assert f(HALF_POWER, q) == pytest.approx(2.0)
        assert f_prime(HALF_POWER, q) == pytest.approx(1.0 / (4.0 * math.exp(4.0)))

    @pytest.mark.parametrize("spec", ALL_SPECS, ids=lambda s: s.label)
    def test_zero_at_zero(self, spec):
        assert f(spec, 0) == pytest.approx(0.0, abs=1e-15)

    @pytest.mark.parametrize("spec", ALL_SPECS, ids=lambda s: s.label)
    def test_negative_queue_rejected(self, spec):
        with pytest.raises(DomainError):
            f(spec, -1)

    def test_known_values(self):
        assert f(WeightFunctionSpec(kind=WeightKind.LINEAR), 7) == 7.0
        assert f(WeightFunctionSpec(kind=WeightKind.SQRT), 9) == 3.0
        q = math.e - 1.0
        assert f(WeightFunctionSpec(kind=WeightKind.LOG_OVER_LOGLOG), q) == pytest.approx(1.0 / math.log(math.e + 1.0))

    @pytest.mark.parametrize("spec", ALL_SPECS, ids=lambda s: s.label)
    def test_array_matches_scalar(self, spec):
        queues = np.array([0, 1, 5, 123, 10**6])
        expected = [f(spec, int(q)) for q in queues]
        assert f_array(spec, queues) == pytest.approx(expected, rel=1e-12, abs=1e-15)

    def test_huge_integer_backlog(self):
        """Python ints past double range stay finite for the log kinds"""
        value = f(WeightFunctionSpec(kind=WeightKind.LOG_OVER_LOGLOG), 10**400)
        assert math.isfinite(value)
        assert value > 100.0

    @pytest.mark.parametrize(
        "q", [2**53 + 1, 10**20, 10**400, 10**5000], ids=lambda q: f"bits{q.bit_length()}"
    )
    def test_log1p_of_large_ints(self, q):
        assert log1p_exact(q) == pytest.approx(math.log(q), rel=1e-15)

    def test_log1p_small_values(self):
        assert log1p_exact(0) == 0.0
        assert log1p_exact(2**53) == pytest.approx(53 * math.log(2.0), rel=1e-15)
        with pytest.raises(DomainError):
            log1p_exact(-1)

    @pytest.mark.parametrize("spec", ALL_SPECS, ids=lambda s: s.label)
    @pytest.mark.parametrize("q", [1.0, 10.0, 1000.0])
    def test_derivative_matches_finite_difference(self, spec, q):
        h = 1e-4 * q
        numeric = (f(spec, q + h) - f(spec, q - h)) / (2.0 * h)
        assert f_prime(spec, q) == pytest.approx(numeric, rel=1e-5)

    def test_derivative_diverges_at_zero(self):
        assert f_prime(HALF_POWER, 0) == math.inf
        assert f_prime(WeightFunctionSpec(kind=WeightKind.SQRT), 0) == math.inf
        assert f_prime(WeightFunctionSpec(kind=WeightKind.LINEAR), 0) == 1.0

    @pytest.mark.parametrize("spec", CONCAVE_SPECS, ids=lambda s: s.label)
    def test_derivative_below_log_slope(self, spec):
        for q in [1, 2, 10, 100, 10**4, 10**8]:
            assert f_prime(spec, q) <= 1.0 / (1.0 + q)

    @pytest.mark.parametrize("spec", CONCAVE_SPECS, ids=lambda s: s.label)
    def test_concave_and_increasing(self, spec):
        values = f_array(spec, np.arange(0, 3000))
        steps = np.diff(values)
        assert np.all(steps > 0.0)
        assert np.all(np.diff(steps) <= 1e-12)


class TestGrowth:
    def test_g_reconstructs_f(self):
        for spec in (WeightFunctionSpec(kind=WeightKind.LOG_OVER_LOGLOG), HALF_POWER):
            for q in [1, 50, 10**5]:
                assert math.log1p(q) / g(spec, q) == pytest.approx(f(spec, q))

    def test_g_undefined_for_other_kinds(self):
        with pytest.raises(DomainError):
            g(WeightFunctionSpec(kind=WeightKind.LINEAR), 3)


class TestInverse:
    """Tests for f_inverse and its log-space forms"""

    def test_log_power_half(self):
        assert f_inverse(HALF_POWER, 2.0) == pytest.approx(math.exp(4.0) - 1.0, rel=1e-12)

    def test_zero_weight(self):
        for spec in ALL_SPECS:
            assert f_inverse(spec, 0.0) == 0.0

    def test_negative_weight_rejected(self):
        with pytest.raises(DomainError):
            f_inverse(HALF_POWER, -0.5)

    @settings(max_examples=60, deadline=None)
    @given(spec=st.sampled_from(ALL_SPECS), q=st.floats(1.0, 1e6))
    def test_inverts_f(self, spec, q):
        assert f_inverse(spec, f(spec, q)) == pytest.approx(q, rel=1e-8)

    def test_overflowing_inverse(self):
        """q itself overflows but log(1+q) and log log(1+q) stay finite"""
        assert f_inverse(HALF_POWER, 40.0) == math.inf
        assert log1p_f_inverse(HALF_POWER, 40.0) == pytest.approx(1600.0)
        assert log_log1p_f_inverse(HALF_POWER, math.log(1e200)) == pytest.approx(2.0 * math.log(1e200))

    def test_log_over_loglog_fixed_point(self):
        spec = WeightFunctionSpec(kind=WeightKind.LOG_OVER_LOGLOG)
        L = log1p_f_inverse(spec, 50.0)
        assert L / math.log(math.e + L) == pytest.approx(50.0, rel=1e-12)


class TestFloor:
    """Tests for w_min and effective weights"""

    def test_w_min_fraction(self):
        config = WeightConfig(spec=HALF_POWER, epsilon=0.2, num_links=10)
        assert w_min(config, 1000) == pytest.approx(0.01 * f(HALF_POWER, 1000))

    def test_floor_applies_to_small_queues(self):
        config = WeightConfig(spec=WeightFunctionSpec(kind=WeightKind.LINEAR), epsilon=0.2, num_links=2)
        assert effective_weight(config, 0, 100) == pytest.approx(5.0)
        assert effective_weight(config, 60, 100) == 60.0

    def test_floor_disabled(self):
        config = WeightConfig(
            spec=WeightFunctionSpec(kind=WeightKind.LINEAR), epsilon=0.2, num_links=2, use_wmin=False
        )
        assert effective_weight(config, 0, 100) == 0.0

    def test_queue_above_max_rejected(self):
        with pytest.raises(DomainError):
            effective_weight(WeightConfig(), 5, 4)

    def test_vectorized(self):
        config = WeightConfig(spec=WeightFunctionSpec(kind=WeightKind.LINEAR), epsilon=0.2, num_links=2)
        assert effective_weights(config, np.array([0.0, 100.0])).tolist() == pytest.approx([5.0, 100.0])

    def test_all_zero_queues(self):
        config = WeightConfig(num_links=3)
        assert effective_weights(config, np.zeros(3)).tolist() == [0.0, 0.0, 0.0]

    def test_epsilon_bounds(self):
        with pytest.raises(ValueError):
            WeightConfig(epsilon=1.0)
        with pytest.raises(ValueError):
            WeightFunctionSpec(kind=WeightKind.LOG_POWER, theta=0.0)


class TestSlowVariation:
    """Tests for the sandwich and small-q helpers"""

    @pytest.mark.parametrize("spec", CONCAVE_SPECS, ids=lambda s: s.label)
    def test_threshold_exists(self, spec):
        threshold = slow_variation_threshold(spec)
        assert threshold is not None
        assert slow_variation_sandwich(spec, threshold, 5, 5, 0.1)
        assert slow_variation_sandwich(spec, 10 * threshold, 5, 5, 0.1)

    def test_linear_threshold(self):
        """Linear needs q of about 50 for M = 5 and eps = 0.1"""
        linear = WeightFunctionSpec(kind=WeightKind.LINEAR)
        assert not slow_variation_sandwich(linear, 49, 5, 5, 0.1)
        assert slow_variation_sandwich(linear, 51, 5, 5, 0.1)
        assert slow_variation_threshold(linear, q_limit=10) is None

    def test_below_m1(self):
        assert not slow_variation_sandwich(HALF_POWER, 3, 5, 5, 0.1)

    def test_small_q_condition(self):
        assert small_backlog_condition(HALF_POWER, 2.0)
        assert not small_backlog_condition(HALF_POWER, 0.1)


class TestLabels:
    def test_labels(self):
        assert HALF_POWER.label == "log_power-0.5"
        assert WeightFunctionSpec(kind=WeightKind.LOGLOG).label == "loglog"
