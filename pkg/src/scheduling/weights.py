"""Weight functions f(q), the w_min floor and the effective-weight rule.

All logarithms are natural. Besides the plain evaluators, the module exposes
log-space forms keyed on ``L = log(1 + q)`` so the analysis layer can work at
backlogs far beyond double range.
"""

from __future__ import annotations

import math
from enum import Enum

import numpy as np
from pydantic import BaseModel, Field
from scipy.optimize import brentq

from src.errors import DomainError

E = math.e
_LOG_E_MINUS_1 = math.log(E - 1.0)
_INVERSE_RTOL = 1e-12


class WeightKind(str, Enum):
    """Supported weight functions"""
    LOG_OVER_LOGLOG = "log_over_loglog"  # log(1+x) / log(e + log(1+x))
    LOG_POWER = "log_power"  # log(1+x)^(1-theta)
    LOGLOG = "loglog"  # log log(e+x)
    LINEAR = "linear"  # x
    SQRT = "sqrt"  # sqrt(x)


# Kinds of the form log(1+x)/g(x) with a strictly increasing g
GROWTH_KINDS = frozenset({WeightKind.LOG_OVER_LOGLOG, WeightKind.LOG_POWER})
CONCAVE_KINDS = frozenset({WeightKind.LOG_OVER_LOGLOG, WeightKind.LOG_POWER, WeightKind.LOGLOG})


class WeightFunctionSpec(BaseModel):
    """Choice of weight function"""

    kind: WeightKind = Field(default=WeightKind.LOG_OVER_LOGLOG, description="Weight function family")
    theta: float = Field(default=0.5, gt=0.0, lt=1.0, description="Exponent for LOG_POWER only")

    @property
    def label(self) -> str:
        if self.kind is WeightKind.LOG_POWER:
            return f"{self.kind.value}-{self.theta:g}"
        return self.kind.value


class WeightConfig(BaseModel):
    """Weight function plus the oracle-q_max floor parameters"""

    spec: WeightFunctionSpec = Field(default_factory=WeightFunctionSpec)
    epsilon: float = Field(default=0.2, gt=0.0, lt=1.0, description="Throughput slack")
    num_links: int = Field(default=1, ge=1, description="N, used by the floor (eps / 2N) f(q_max)")
    use_wmin: bool = Field(default=True, description="Apply the w_min floor; False uses f directly")


# ============================================================================
# Helpers
# ============================================================================

def log1p_exact(q: int | float) -> float:
    """log(1 + q) that also accepts Python ints beyond double range"""
    if q < 0:
        raise DomainError(f"Queue length must be nonnegative, got {q}")
    if isinstance(q, int) and q > 2**53:
        # log1p(1/q) < 2^-53 here, below double resolution of log(q)
        return math.log(q)
    return math.log1p(q)


def _log_expm1(L: float) -> float:
    """log(e^L - 1) for L > 0, stable at both ends"""
    if L <= 0.0:
        return -math.inf
    if L > 30.0:
        return L + math.log1p(-math.exp(-L))
    return math.log(math.expm1(L))


def _log_log_e_plus(L: float) -> float:
    """log(log(e + q)) where L = log(1 + q)"""
    return math.log(np.logaddexp(_LOG_E_MINUS_1, L))


# ============================================================================
# f and its derivative
# ============================================================================

def f(spec: WeightFunctionSpec, q: int | float) -> float:
    """Weight of a queue of length ``q``"""
    if q < 0:
        raise DomainError(f"Queue length must be nonnegative, got {q}")
    kind = spec.kind
    if kind is WeightKind.LINEAR:
        return float(q)
    if kind is WeightKind.SQRT:
        return math.sqrt(q)
    return f_from_log1p(spec, log1p_exact(q))


def f_from_log1p(spec: WeightFunctionSpec, L: float) -> float:
    """f evaluated at the q with log(1 + q) = L"""
    kind = spec.kind
    if kind is WeightKind.LOG_OVER_LOGLOG:
        return L / math.log(E + L)
    if kind is WeightKind.LOG_POWER:
        return L ** (1.0 - spec.theta)
    if kind is WeightKind.LOGLOG:
        return _log_log_e_plus(L)
    if kind is WeightKind.LINEAR:
        return math.expm1(L) if L < 709.0 else math.inf
    if kind is WeightKind.SQRT:
        return math.exp(0.5 * _log_expm1(L)) if L > 0.0 else 0.0
    raise DomainError(f"Unknown weight kind {kind!r}")


def f_array(spec: WeightFunctionSpec, q: np.ndarray) -> np.ndarray:
    """Vectorized f over a queue vector"""
    q = np.asarray(q, dtype=np.float64)
    kind = spec.kind
    if kind is WeightKind.LINEAR:
        return q.copy()
    if kind is WeightKind.SQRT:
        return np.sqrt(q)
    L = np.log1p(q)
    if kind is WeightKind.LOG_OVER_LOGLOG:
        return L / np.log(E + L)
    if kind is WeightKind.LOG_POWER:
        return L ** (1.0 - spec.theta)
    if kind is WeightKind.LOGLOG:
        return np.log(np.log(E + q))
    raise DomainError(f"Unknown weight kind {kind!r}")


def f_prime(spec: WeightFunctionSpec, q: int | float) -> float:
    """Analytic derivative of f at ``q``; +inf where it diverges (LOG_POWER, SQRT at 0)"""
    if q < 0:
        raise DomainError(f"Queue length must be nonnegative, got {q}")
    kind = spec.kind
    if kind is WeightKind.LINEAR:
        return 1.0
    if kind is WeightKind.SQRT:
        return math.inf if q == 0 else 0.5 / math.sqrt(q)
    if kind is WeightKind.LOG_POWER and q == 0:
        return math.inf
    return math.exp(log_f_prime_from_log1p(spec, log1p_exact(q)))


def log_f_prime_from_log1p(spec: WeightFunctionSpec, L: float) -> float:
    """log f'(q) where L = log(1 + q)"""
    kind = spec.kind
    if kind is WeightKind.LOG_OVER_LOGLOG:
        G = math.log(E + L)
        return math.log(G - L / (E + L)) - 2.0 * math.log(G) - L
    if kind is WeightKind.LOG_POWER:
        if L == 0.0:
            return math.inf
        return math.log(1.0 - spec.theta) - spec.theta * math.log(L) - L
    if kind is WeightKind.LOGLOG:
        # f' = 1 / (H (e + q)) with H = log(e + q)
        H = float(np.logaddexp(_LOG_E_MINUS_1, L))
        return -H - math.log(H)
    if kind is WeightKind.LINEAR:
        return 0.0
    if kind is WeightKind.SQRT:
        if L == 0.0:
            return math.inf
        return -math.log(2.0) - 0.5 * _log_expm1(L)
    raise DomainError(f"Unknown weight kind {kind!r}")


# ============================================================================
# Growth function g (kinds of the form log(1+x)/g(x))
# ============================================================================

def g(spec: WeightFunctionSpec, q: int | float) -> float:
    """Growth function g with f(q) = log(1+q) / g(q)"""
    return g_from_log1p(spec, log1p_exact(q))


def g_from_log1p(spec: WeightFunctionSpec, L: float) -> float:
    if spec.kind is WeightKind.LOG_OVER_LOGLOG:
        return math.log(E + L)
    if spec.kind is WeightKind.LOG_POWER:
        return L ** spec.theta
    raise DomainError(f"{spec.kind.value} is not of the form log(1+x)/g(x)")


def log1p_g_inverse(spec: WeightFunctionSpec, y: float) -> float:
    """log(1 + g^{-1}(y)); for LOG_OVER_LOGLOG this is e^y - e, for LOG_POWER y^(1/theta)"""
    if spec.kind is WeightKind.LOG_OVER_LOGLOG:
        if y < 1.0:
            raise DomainError(f"g(x) = log(e + log(1+x)) >= 1; no inverse at {y}")
        return math.exp(y) - E
    if spec.kind is WeightKind.LOG_POWER:
        if y < 0.0:
            raise DomainError(f"g(x) = log(1+x)^theta >= 0; no inverse at {y}")
        return y ** (1.0 / spec.theta)
    raise DomainError(f"{spec.kind.value} is not of the form log(1+x)/g(x)")


# ============================================================================
# Inverse
# ============================================================================

def log1p_f_inverse(spec: WeightFunctionSpec, w: float) -> float:
    """log(1 + q) for the unique q with f(q) = w"""
    if w < 0:
        raise DomainError(f"Weights are nonnegative, got {w}")
    if w == 0:
        return 0.0
    kind = spec.kind
    if kind is WeightKind.LOG_POWER:
        return w ** (1.0 / (1.0 - spec.theta))
    if kind is WeightKind.LINEAR:
        return math.log1p(w)
    if kind is WeightKind.SQRT:
        return math.log1p(w * w)
    if kind is WeightKind.LOGLOG:
        # log(e + q) = e^w, so 1 + q = e^(e^w) - (e - 1)
        H = math.exp(w)
        return H + math.log1p(-(E - 1.0) * math.exp(-H))
    if kind is WeightKind.LOG_OVER_LOGLOG:
        return math.exp(_log_L_log_over_loglog(math.log(w)))
    raise DomainError(f"Unknown weight kind {kind!r}")


def _log_L_log_over_loglog(log_w: float) -> float:
    """Solve L / log(e + L) = w for log L, given log w (contraction on log L)"""
    ell = log_w
    for _ in range(200):
        nxt = log_w + math.log(float(np.logaddexp(1.0, ell)))
        if abs(nxt - ell) <= 1e-15 * max(1.0, abs(nxt)):
            return nxt
        ell = nxt
    return ell


def log_log1p_f_inverse(spec: WeightFunctionSpec, log_w: float) -> float:
    """log log(1 + f^{-1}(w)) given log w; finite even when w overflows a double"""
    kind = spec.kind
    if kind is WeightKind.LOG_POWER:
        return log_w / (1.0 - spec.theta)
    if kind is WeightKind.LOG_OVER_LOGLOG:
        return _log_L_log_over_loglog(log_w)
    if kind is WeightKind.LOGLOG:
        # L ~ e^w
        if log_w > 700.0:
            return math.exp(log_w)
    return math.log(log1p_f_inverse(spec, math.exp(log_w)))


def f_inverse(spec: WeightFunctionSpec, w: float) -> float:
    """
    The unique q >= 0 with f(q) = w.

    Closed forms where they exist; for LOG_OVER_LOGLOG a bracketed root-find in
    L = log(1+q) followed by a Newton polish in q, to relative tolerance 1e-12.
    Returns +inf when q overflows a double.
    """
    if w < 0:
        raise DomainError(f"Weights are nonnegative, got {w}")
    if w == 0:
        return 0.0
    kind = spec.kind
    if kind is WeightKind.LINEAR:
        return float(w)
    if kind is WeightKind.SQRT:
        return float(w) * float(w)
    if kind is not WeightKind.LOG_OVER_LOGLOG:
        L = log1p_f_inverse(spec, w)
        return math.expm1(L) if L < 709.0 else math.inf

    L_guess = log1p_f_inverse(spec, w)
    if L_guess >= 709.0:
        return math.inf
    L = brentq(
        lambda x: x - w * math.log(E + x),
        0.0,
        max(2.0 * L_guess, 1.0),
        xtol=1e-300,
        rtol=4 * np.finfo(float).eps,
    )
    q = math.expm1(L)
    # Newton polish in q
    for _ in range(3):
        slope = f_prime(spec, q)
        if not math.isfinite(slope) or slope == 0.0:
            break
        step = (f(spec, q) - w) / slope
        q_next = max(q - step, 0.0)
        if abs(q_next - q) <= _INVERSE_RTOL * max(q, 1.0):
            q = q_next
            break
        q = q_next
    return q


# ============================================================================
# Floor and effective weights
# ============================================================================

def w_min(config: WeightConfig, q_max: int | float) -> float:
    """The floor (eps / 2N) f(q_max)"""
    return config.epsilon / (2.0 * config.num_links) * f(config.spec, q_max)


def effective_weight(config: WeightConfig, q_l: int | float, q_max: int | float) -> float:
    """max(f(q_l), w_min) with the floor enabled, else f(q_l)"""
    if q_l > q_max:
        raise DomainError(f"Link backlog {q_l} exceeds q_max {q_max}")
    weight = f(config.spec, q_l)
    if not config.use_wmin:
        return weight
    return max(weight, w_min(config, q_max))


def effective_weights(config: WeightConfig, queues: np.ndarray) -> np.ndarray:
    """Vectorized effective weights for a whole queue vector (oracle q_max)"""
    weights = f_array(config.spec, queues)
    if not config.use_wmin or weights.size == 0:
        return weights
    floor = config.epsilon / (2.0 * config.num_links) * float(weights.max())
    return np.maximum(weights, floor)


# ============================================================================
# Properties used by the analysis layer and the verification suite
# ============================================================================

def slow_variation_sandwich(spec: WeightFunctionSpec, q: int, m1: int, m2: int, epsilon: float) -> bool:
    """(1-eps) f(q) <= f(q-M1) <= f(q+M2) <= (1+eps) f(q), for q >= M1"""
    if q < m1:
        return False
    base = f(spec, q)
    lower = f(spec, q - m1)
    upper = f(spec, q + m2)
    return (1.0 - epsilon) * base <= lower <= upper <= (1.0 + epsilon) * base


def slow_variation_threshold(
    spec: WeightFunctionSpec,
    m1: int = 5,
    m2: int = 5,
    epsilon: float = 0.1,
    q_limit: int = 10**9,
    ratio: float = 1.05,
) -> int | None:
    """
    Smallest point Q of a geometric scan up to ``q_limit`` beyond which the
    sandwich holds at every scanned q; None if it fails at the top of the scan.
    """
    points: list[int] = []
    q = max(m1, 1)
    while q <= q_limit:
        points.append(q)
        q = max(q + 1, int(q * ratio))

    threshold: int | None = None
    for point in points:
        if slow_variation_sandwich(spec, point, m1, m2, epsilon):
            if threshold is None:
                threshold = point
        else:
            threshold = None
    return threshold


def small_backlog_condition(spec: WeightFunctionSpec, w_floor: float) -> bool:
    """g(f^{-1}(w_min) - 1) >= 1, the small-q condition for LOG_POWER-type kinds"""
    L = log1p_f_inverse(spec, w_floor)
    # log(1 + (f^{-1}(w) - 1)) = log(f^{-1}(w)) = log(e^L - 1)
    shifted = _log_expm1(L)
    if shifted < 0.0:
        return False
    return g_from_log1p(spec, shifted) >= 1.0
