"""Exact max-weight independent set by branch and bound"""

from __future__ import annotations

import numpy as np

from src.config import get_settings
from src.errors import DomainError, EnumerationCapError
from src.network.conflict_graph import ConflictGraph, Schedule

TIE_TOL = 1e-12


class _BranchAndBound:
    """Depth-first search over candidate links, heaviest first"""

    def __init__(self, graph: ConflictGraph, weights: np.ndarray):
        self.neighbor_masks = graph.neighbor_masks
        self.weights = [float(w) for w in weights]
        self.best_weight = 0.0
        self.best_mask = 0

    def _better(self, weight: float, mask: int) -> bool:
        scale = TIE_TOL * max(1.0, abs(self.best_weight))
        if weight > self.best_weight + scale:
            return True
        return abs(weight - self.best_weight) <= scale and mask < self.best_mask

    def search(self, candidates: int, mask: int, weight: float) -> None:
        if candidates == 0:
            if self._better(weight, mask):
                self.best_weight, self.best_mask = weight, mask
            return

        weights = self.weights
        bound = weight
        pick = -1
        pick_weight = -1.0
        remaining = candidates
        while remaining:
            low = remaining & -remaining
            link = low.bit_length() - 1
            remaining ^= low
            bound += weights[link]
            if weights[link] > pick_weight:
                pick, pick_weight = link, weights[link]

        if bound < self.best_weight - TIE_TOL * max(1.0, abs(self.best_weight)):
            return

        bit = 1 << pick
        self.search(candidates & ~bit & ~self.neighbor_masks[pick], mask | bit, weight + pick_weight)
        self.search(candidates & ~bit, mask, weight)


def mws_oracle(
    graph: ConflictGraph,
    weights: np.ndarray,
    cap: int | None = None,
) -> tuple[Schedule, float]:
    """
    A maximum-weight independent set and its weight w*.

    Links with zero weight never join, so among optimal sets the smallest
    bitmask is returned.
    """
    cap = get_settings().mws_cap if cap is None else cap
    if graph.num_links > cap:
        raise EnumerationCapError(f"Exact MWIS refused: N={graph.num_links} exceeds the cap of {cap}")
    weights = np.asarray(weights, dtype=np.float64)
    if weights.shape != (graph.num_links,):
        raise DomainError(f"Expected {graph.num_links} weights, got shape {weights.shape}")
    if np.any(weights < 0):
        raise DomainError("Max-weight scheduling needs nonnegative weights")

    candidates = 0
    for link in range(graph.num_links):
        if weights[link] > 0:
            candidates |= 1 << link

    solver = _BranchAndBound(graph, weights)
    solver.search(candidates, 0, 0.0)
    return Schedule(mask=solver.best_mask, num_links=graph.num_links), solver.best_weight
