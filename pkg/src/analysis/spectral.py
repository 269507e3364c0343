"""Spectra, mixing-time bounds and conductance of enumerated Glauber chains"""

from __future__ import annotations

import math

import numpy as np
from pydantic import BaseModel, Field
from scipy.linalg import eigh

from src.config import get_settings
from src.errors import EnumerationCapError, NonReversibleError
from src.network.conflict_graph import Schedule
from src.scheduling.glauber import ChainModel

REVERSIBILITY_TOL = 1e-9
LINEAR_LIMIT = 1e300
_CHUNK = 1 << 15


class LogValue(BaseModel):
    """A positive quantity kept in natural-log scale; ``value`` only when representable"""

    log: float
    value: float | None = None

    @classmethod
    def from_log(cls, log_value: float) -> LogValue:
        linear = math.exp(log_value) if log_value < math.log(LINEAR_LIMIT) else None
        return cls(log=log_value, value=linear)


class SpectralReport(BaseModel):
    """Spectrum of a reversible kernel and the matching mixing-time bounds"""

    kind: str = Field(description="single or multi")
    eigenvalues: list[float] = Field(description="Sorted descending")
    lambda2: float
    lambda_min: float
    slem: float = Field(description="max(lambda2, |lambda_min|)")
    mixing_time: float = Field(description="1 / (1 - slem)")
    w_max: float
    bound_single: LogValue
    bound_multi: LogValue

    @property
    def bound(self) -> LogValue:
        """The bound that applies to this chain type"""
        return self.bound_multi if self.kind == "multi" else self.bound_single

    @property
    def within_bound(self) -> bool:
        return math.log(self.mixing_time) <= self.bound.log + 1e-12


# ============================================================================
# Bounds
# ============================================================================

def mixing_bound_single(num_links: int, w_max: float) -> LogValue:
    """16^N exp(4 N w_max)"""
    return LogValue.from_log(num_links * math.log(16.0) + 4.0 * num_links * w_max)


def mixing_bound_multi(num_links: int, w_max: float) -> LogValue:
    """(64^N / 2) exp(4 N w_max)"""
    return LogValue.from_log(num_links * math.log(64.0) - math.log(2.0) + 4.0 * num_links * w_max)


# ============================================================================
# Spectrum
# ============================================================================

def symmetrized_kernel(model: ChainModel) -> np.ndarray:
    """D^{1/2} P D^{-1/2} with D = diag(pi); symmetric when P is reversible"""
    root = np.sqrt(model.stationary)
    similar = root[:, None] * model.kernel / root[None, :]
    return 0.5 * (similar + similar.T)


def slem(model: ChainModel) -> SpectralReport:
    """Full real spectrum of a reversible kernel via its symmetrized form"""
    residual = model.detailed_balance_residual()
    if residual > REVERSIBILITY_TOL:
        raise NonReversibleError(f"Detailed-balance residual {residual:.3e} exceeds {REVERSIBILITY_TOL}")

    eigenvalues = np.sort(eigh(symmetrized_kernel(model), eigvals_only=True))[::-1]
    lambda2 = float(eigenvalues[1]) if len(eigenvalues) > 1 else 0.0
    lambda_min = float(eigenvalues[-1])
    sigma = max(lambda2, abs(lambda_min)) if len(eigenvalues) > 1 else 0.0
    mixing_time = math.inf if sigma >= 1.0 else 1.0 / (1.0 - sigma)

    n = model.graph.num_links
    w_max = float(np.max(model.weights)) if model.weights.size else 0.0
    return SpectralReport(
        kind=model.kind,
        eigenvalues=[float(x) for x in eigenvalues],
        lambda2=lambda2,
        lambda_min=lambda_min,
        slem=sigma,
        mixing_time=mixing_time,
        w_max=w_max,
        bound_single=mixing_bound_single(n, w_max),
        bound_multi=mixing_bound_multi(n, w_max),
    )


def gershgorin_floor(model: ChainModel) -> float:
    """-1 + 2 min_i P_ii, a lower bound on every eigenvalue"""
    return -1.0 + 2.0 * float(np.min(np.diag(model.kernel)))


# ============================================================================
# Conductance
# ============================================================================

def conductance(model: ChainModel, cap: int | None = None) -> tuple[float, list[Schedule]]:
    """
    Exact conductance min F(B) / pi(B) over state sets with pi(B) <= 1/2,
    where F(B) = sum_{i in B, j not in B} pi(i) P(i, j).

    Exhaustive over all 2^r subsets, processed in vectorized chunks.
    """
    cap = get_settings().conductance_state_cap if cap is None else cap
    r = model.size
    if r > cap:
        raise EnumerationCapError(f"Exact conductance refused: {r} states exceed the cap of {cap}")

    pi = model.stationary
    flow = pi[:, None] * model.kernel
    bits = np.arange(r, dtype=np.int64)

    best = math.inf
    best_mask = 0
    total = 1 << r
    for start in range(1, total, _CHUNK):
        masks = np.arange(start, min(start + _CHUNK, total), dtype=np.int64)
        members = ((masks[:, None] >> bits[None, :]) & 1).astype(np.float64)
        mass = members @ pi
        inside = np.einsum("bi,ij,bj->b", members, flow, members)
        escape = mass - inside
        eligible = mass <= 0.5 + 1e-15
        if not np.any(eligible):
            continue
        ratios = np.where(eligible, escape / np.where(mass > 0, mass, 1.0), np.inf)
        position = int(np.argmin(ratios))
        if ratios[position] < best:
            best = float(ratios[position])
            best_mask = int(masks[position])

    minimizing = [model.states[i] for i in range(r) if best_mask >> i & 1]
    return best, minimizing


def cheeger_sandwich(phi: float, lambda2: float, tol: float = 1e-12) -> bool:
    """1 - 2 phi <= lambda2 <= 1 - phi^2 / 2"""
    return 1.0 - 2.0 * phi - tol <= lambda2 <= 1.0 - phi * phi / 2.0 + tol
