"""Exact checks on the low-weight schedule set chi_t used by the throughput argument"""

from __future__ import annotations

import math
from typing import Sequence

import numpy as np
from scipy.special import logsumexp

from src.network.conflict_graph import Schedule


def schedule_weights(states: Sequence[Schedule], weights: np.ndarray) -> np.ndarray:
    """Total weight of every enumerated schedule"""
    weights = np.asarray(weights, dtype=np.float64)
    return np.array([float(weights[s.to_array()].sum()) for s in states])


def chi_members(states: Sequence[Schedule], weights: np.ndarray, epsilon: float) -> np.ndarray:
    """Boolean mask of schedules whose weight is below (1 - eps) w*"""
    totals = schedule_weights(states, weights)
    return totals < (1.0 - epsilon) * totals.max()


def chi_set_mass(
    states: Sequence[Schedule],
    stationary: np.ndarray,
    weights: np.ndarray,
    epsilon: float,
) -> float:
    """pi(chi) for the raw weights ``weights`` (chi is defined on w, not on the floored weights)"""
    return float(np.asarray(stationary)[chi_members(states, weights, epsilon)].sum())


def chi_bound(num_links: int, floor: float, w_star: float, epsilon: float) -> float:
    """2^N exp(N w_min - eps w*)"""
    return math.exp(num_links * math.log(2.0) + num_links * floor - epsilon * w_star)


def log_partition_function(states: Sequence[Schedule], effective: np.ndarray) -> float:
    """log Z = log sum_rho exp(sum_{i in rho} w~_i)"""
    return float(logsumexp(schedule_weights(states, effective)))
