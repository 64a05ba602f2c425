"""Sampling-rate bounds for support recovery.

The lower bound excludes every rate ``rho < omega`` whose per-coordinate
mutual-information bound falls below ``H(omega) - H(alpha * omega)``; the
upper bound is the smallest rate at which the scalar thresholding test errs
less than ``alpha * omega``.  Both are capped by the general-source rate.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
from scipy import optimize

from .core import DistributionSpec, binary_entropy, delta, gaussian_family, theta
from .freeprob import mutual_info_bound
from .hypothesis import MixtureModel, epsilon

__all__ = [
    "RateDistortionPoint",
    "general_source_rate",
    "fano_gap",
    "lb_excludes",
    "corollary_holds",
    "corollary_threshold",
    "lower_bound_rate",
    "upper_bound_rate",
    "figure_curve",
    "FIGURE_OMEGA",
    "FIGURE_ALPHA",
]

KINDS = ("general_universal", "general_basis_specific", "lower_bound", "upper_bound", "empirical")
FIGURE_OMEGA = 0.35
FIGURE_ALPHA = {2: 0.3, 3: 0.95}


@dataclass(frozen=True)
class RateDistortionPoint:
    alpha: float
    rho: float
    kind: str
    mu: Optional[float] = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown point kind {self.kind!r}")
        if not (0 <= self.alpha <= 1 and 0 <= self.rho <= 1):
            raise ValueError(f"alpha and rho must lie in [0, 1], got {self.alpha}, {self.rho}")


def _check(omega, alpha):
    if not 0 < omega < 1:
        raise ValueError(f"omega must lie in (0, 1), got {omega}")
    if not 0 <= alpha <= 1:
        raise ValueError(f"alpha must lie in [0, 1], got {alpha}")


def general_source_rate(omega: float, alpha: float, universal: bool = True) -> float:
    _check(omega, alpha)
    if alpha >= 1:
        return 0.0
    return omega if universal else (1 - alpha) * omega


def fano_gap(omega: float, alpha: float) -> float:
    """``H(omega) - H(alpha * omega)``, the entropy budget a rate must cover."""
    return binary_entropy(omega) - binary_entropy(alpha * omega)


def lb_excludes(rho: float, alpha: float, omega: float, f: DistributionSpec) -> bool:
    """True when ``(rho, alpha)`` is provably not achievable."""
    _check(omega, alpha)
    if not 0 < rho < 1:
        raise ValueError(f"rho must lie in (0, 1), got {rho}")
    if rho >= omega:
        return False
    return bool(mutual_info_bound(rho, omega, f) < fano_gap(omega, alpha))


def corollary_threshold(omega: float, alpha: float) -> float:
    return delta(omega) * math.exp(-2.0 / omega * fano_gap(omega, alpha))


def corollary_holds(alpha: float, omega: float, f: DistributionSpec) -> bool:
    _check(omega, alpha)
    return theta(omega, f) > corollary_threshold(omega, alpha)


def _excluded_mask(rhos, alpha, omega, th):
    gap = fano_gap(omega, alpha)
    with np.errstate(divide="ignore"):
        lhs = 0.5 * rhos * (np.log(delta(rhos)) - np.log(delta(rhos / omega)) - math.log(th))
    return (rhos < omega) & (lhs < gap)


def _scan_lower_bound(alpha, omega, f, grid_points):
    rhos = np.linspace(0.0, omega, grid_points + 1)[1:]
    excluded = _excluded_mask(rhos, alpha, omega, theta(omega, f))
    hits = np.flatnonzero(excluded)
    if hits.size == 0:
        return 0.0
    j = hits[-1]
    lo, hi = rhos[j], rhos[j + 1] if j + 1 < rhos.size else omega
    while hi - lo > 1e-8:
        mid = 0.5 * (lo + hi)
        if lb_excludes(mid, alpha, omega, f):
            lo = mid
        else:
            hi = mid
    return float(lo)


def lower_bound_rate(alpha: float, omega: float, f: DistributionSpec, grid_points: int = 10_000) -> float:
    """Supremum of the rates excluded by the information-theoretic bound.

    When the limit ``rho -> omega`` is itself excluded (the corollary
    condition) the supremum is ``omega`` exactly.
    """
    _check(omega, alpha)
    if alpha >= 1 or theta(omega, f) == 0:
        return 0.0
    if corollary_holds(alpha, omega, f):
        return omega
    return _scan_lower_bound(alpha, omega, f, grid_points)


def _epsilon_at(rho, omega, f):
    return epsilon(MixtureModel(rho, omega, f))


def upper_bound_rate(
    alpha: float, omega: float, f: DistributionSpec, grid_points: int = 48, tol: float = 1e-8
) -> float:
    """Smallest rate at which thresholding reaches distortion ``alpha``, capped at ``omega``."""
    _check(omega, alpha)
    if alpha >= 1:
        return 0.0
    target = alpha * omega
    if min(omega, 1 - omega) < target:
        return 0.0
    rhos = np.linspace(0.0, omega, grid_points + 1)
    eps = np.array([_epsilon_at(r, omega, f) for r in rhos])
    below = np.flatnonzero(eps < target)
    if below.size == 0:
        return omega
    j = below[0]
    if np.any(np.diff(eps) > 1e-12):
        # not monotone on the grid; no bracket to trust
        return float(rhos[j])
    root = optimize.brentq(lambda r: _epsilon_at(r, omega, f) - target, rhos[j - 1], rhos[j], xtol=tol)
    return float(min(omega, root))


def figure_curve(
    figure_id: int,
    omega: float = FIGURE_OMEGA,
    alpha: Optional[float] = None,
    grid: Optional[Sequence[float]] = None,
    lower_grid_points: int = 10_000,
    upper_grid_points: int = 48,
) -> list:
    """Curve data behind the three figures as :class:`RateDistortionPoint` rows.

    Figure 1 sweeps ``alpha`` (default 100 points on [0, 1]); figures 2 and 3
    sweep the mean ``mu`` of ``N(mu, 1 - mu^2)`` at ``alpha`` 0.3 and 0.95
    (default 200 points on [0, 1]).  ``rho`` is stored unnormalized.
    """
    if figure_id == 1:
        alphas = np.linspace(0.0, 1.0, 100) if grid is None else np.asarray(grid, dtype=float)
        pts = []
        for a in alphas:
            pts.append(RateDistortionPoint(float(a), general_source_rate(omega, a, True), "general_universal"))
            pts.append(
                RateDistortionPoint(float(a), general_source_rate(omega, a, False), "general_basis_specific")
            )
        return pts
    if figure_id not in FIGURE_ALPHA:
        raise ValueError(f"unknown figure id {figure_id!r}; expected 1, 2 or 3")
    a = FIGURE_ALPHA[figure_id] if alpha is None else alpha
    mus = np.linspace(0.0, 1.0, 200) if grid is None else np.asarray(grid, dtype=float)
    pts = []
    for mu in mus:
        f = gaussian_family(float(mu))
        lo = lower_bound_rate(a, omega, f, lower_grid_points)
        hi = upper_bound_rate(a, omega, f, upper_grid_points)
        pts.append(RateDistortionPoint(a, lo, "lower_bound", float(mu)))
        pts.append(RateDistortionPoint(a, hi, "upper_bound", float(mu)))
    return pts
