"""One-shot exact analysis of a chain: spectrum, conductance and bound checks"""

from __future__ import annotations

import logging
from typing import Literal, Mapping

import numpy as np
from pydantic import BaseModel
from scipy.linalg import solve

from src.analysis.spectral import SpectralReport, cheeger_sandwich, conductance, gershgorin_floor, slem
from src.config import get_settings
from src.network.conflict_graph import ConflictGraph, Schedule, enumerate_independent_sets
from src.scheduling.glauber import (
    ChainModel,
    diagonal_floor,
    stationary_floor,
    transition_matrix_multi,
    transition_matrix_single,
)

logger = logging.getLogger(__name__)

FIXED_POINT_TOL = 1e-9


class AnalysisReport(BaseModel):
    graph: str
    num_links: int
    num_states: int
    chain: Literal["single", "multi"]
    weights: list[float]
    spectral: SpectralReport
    row_sum_residual: float
    detailed_balance_residual: float
    stationary_error: float
    gershgorin_floor: float
    conductance: float | None = None
    conductance_set: list[list[int]] | None = None
    checks: dict[str, bool]
    passed: bool


def left_fixed_point(kernel: np.ndarray) -> np.ndarray:
    """The distribution mu with mu P = mu, by a direct linear solve"""
    size = kernel.shape[0]
    system = kernel.T - np.eye(size)
    system[-1, :] = 1.0
    rhs = np.zeros(size)
    rhs[-1] = 1.0
    return solve(system, rhs)


def analyze_model(model: ChainModel) -> AnalysisReport:
    spectral = slem(model)
    floor = gershgorin_floor(model)
    error = float(np.max(np.abs(left_fixed_point(model.kernel) - model.stationary)))
    w_max = spectral.w_max

    checks = {
        "stationary_product_form": error <= FIXED_POINT_TOL,
        "mixing_bound": spectral.within_bound,
        "gershgorin_floor": spectral.lambda_min >= floor - 1e-12,
        "stationary_floor": float(model.stationary.min())
        >= stationary_floor(model.size, model.graph.num_links, w_max) * (1.0 - 1e-12),
    }
    if model.kind == "single":
        checks["diagonal_floor"] = float(np.min(np.diag(model.kernel))) >= diagonal_floor(w_max) - 1e-12

    phi = None
    minimizing = None
    if model.size <= get_settings().conductance_state_cap:
        phi, states = conductance(model)
        minimizing = [list(s.links) for s in states]
        checks["cheeger_sandwich"] = cheeger_sandwich(phi, spectral.lambda2)
    else:
        logger.warning("Skipping exact conductance: %d states", model.size)

    return AnalysisReport(
        graph=model.graph.name or repr(model.graph),
        num_links=model.graph.num_links,
        num_states=model.size,
        chain=model.kind,
        weights=[float(w) for w in model.weights],
        spectral=spectral,
        row_sum_residual=model.row_sum_residual(),
        detailed_balance_residual=model.detailed_balance_residual(),
        stationary_error=error,
        gershgorin_floor=floor,
        conductance=phi,
        conductance_set=minimizing,
        checks=checks,
        passed=all(checks.values()),
    )


def analyze_chain(
    graph: ConflictGraph,
    weights: np.ndarray,
    chain: Literal["single", "multi"] = "single",
    decision_distribution: Mapping[Schedule, float] | None = None,
) -> AnalysisReport:
    """Build the exact kernel and report on it; the multi-site chain needs a decision law"""
    states = enumerate_independent_sets(graph)
    if chain == "multi":
        model = transition_matrix_multi(graph, weights, decision_distribution or {}, states)
    else:
        model = transition_matrix_single(graph, weights, states)
    return analyze_model(model)
