"""Total variation and weighted l2(1/pi) distances between distributions"""

from __future__ import annotations

import numpy as np

from src.errors import DistributionError, DomainError

NORMALIZATION_TOL = 1e-9


def _as_distribution(p: np.ndarray, name: str) -> np.ndarray:
    p = np.asarray(p, dtype=np.float64)
    if abs(float(p.sum()) - 1.0) > NORMALIZATION_TOL:
        raise DistributionError(f"{name} sums to {float(p.sum())!r}, not 1")
    return p


def tv_distance(p: np.ndarray, q: np.ndarray) -> float:
    """Half the L1 distance"""
    p = _as_distribution(p, "p")
    q = _as_distribution(q, "q")
    if p.shape != q.shape:
        raise DistributionError(f"Length mismatch: {p.shape} vs {q.shape}")
    return 0.5 * float(np.abs(p - q).sum())


def pi_norm_inv(z: np.ndarray, pi: np.ndarray) -> float:
    """||z||_{1/pi} = sqrt(sum z_i^2 / pi_i)"""
    z = np.asarray(z, dtype=np.float64)
    pi = np.asarray(pi, dtype=np.float64)
    if z.shape != pi.shape:
        raise DistributionError(f"Length mismatch: {z.shape} vs {pi.shape}")
    if np.any(pi <= 0.0):
        raise DomainError("pi has a zero entry; the 1/pi norm is undefined")
    return float(np.sqrt(np.sum(z * z / pi)))


def norm_dominates_tv(mu: np.ndarray, pi: np.ndarray, tol: float = 1e-12) -> bool:
    """||mu - pi||_{1/pi} >= 2 ||mu - pi||_TV"""
    return pi_norm_inv(np.asarray(mu) - np.asarray(pi), pi) + tol >= 2.0 * tv_distance(mu, pi)


def drift_norm(pi_next: np.ndarray, pi_now: np.ndarray) -> float:
    """||pi_{t+1} - pi_t||_{1/pi_{t+1}}"""
    return pi_norm_inv(np.asarray(pi_next) - np.asarray(pi_now), pi_next)


def ratio_alpha(pi_next: np.ndarray, pi_now: np.ndarray) -> float:
    """Smallest alpha with e^-alpha <= pi_{t+1} / pi_t <= e^alpha entrywise"""
    return float(np.max(np.abs(np.log(np.asarray(pi_next)) - np.log(np.asarray(pi_now)))))


def drift_bound_holds(pi_next: np.ndarray, pi_now: np.ndarray, alpha: float) -> bool:
    """||pi_{t+1} - pi_t||_{1/pi_{t+1}} <= 2 alpha, asserted only for alpha < 1"""
    if alpha >= 1.0:
        raise DomainError(f"The drift bound needs alpha < 1, got {alpha}")
    return drift_norm(pi_next, pi_now) <= 2.0 * alpha + 1e-15
