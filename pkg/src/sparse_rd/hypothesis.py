"""Scalar test between ``W`` and ``W + sqrt(rho) U``.

``W ~ N(0, omega * E[U^2])`` is the null, ``U ~ F`` the signal and
``P(Z = 1) = omega`` the prior.  The Bayes acceptance region is found by
scanning the weighted log-likelihood ratio for sign changes and refining
each boundary with Brent's method; the error probability is then evaluated
through interval probabilities (Gaussian CDFs, or adaptive quadrature over
``u`` when ``F`` is a custom density).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate, optimize, special

from .core import DistributionSpec, QuadratureError

__all__ = [
    "MixtureModel",
    "ThresholdSet",
    "null_density",
    "alt_density",
    "null_cdf",
    "alt_cdf",
    "log_likelihood_ratio",
    "optimal_threshold_set",
    "error_probability",
    "epsilon",
    "monte_carlo_error",
]

_LOG_2PI = math.log(2 * math.pi)


@dataclass(frozen=True)
class MixtureModel:
    rho: float
    omega: float
    f: DistributionSpec

    def __post_init__(self):
        if not 0 < self.omega < 1:
            raise ValueError(f"prior omega must lie in (0, 1), got {self.omega}")
        if not (self.rho >= 0 and math.isfinite(self.rho)):
            raise ValueError(f"rho must be a finite nonnegative number, got {self.rho}")
        if not self.null_variance > 0:
            raise ValueError("null variance omega * E[U^2] must be positive")

    @property
    def null_variance(self) -> float:
        return self.omega * self.f.second_moment

    @property
    def alt_mean(self) -> float:
        return math.sqrt(self.rho) * self.f.mean

    @property
    def alt_variance(self) -> float:
        return self.null_variance + self.rho * self.f.variance


@dataclass(frozen=True)
class ThresholdSet:
    """Finite union of disjoint open intervals, sorted by left end."""

    intervals: tuple = ()

    def __post_init__(self):
        prev = -math.inf
        for k, (lo, hi) in enumerate(self.intervals):
            if not lo < hi:
                raise ValueError(f"empty interval ({lo}, {hi})")
            if lo < prev or (k > 0 and lo == prev):
                raise ValueError("intervals must be disjoint and sorted")
            prev = hi

    @classmethod
    def empty(cls) -> "ThresholdSet":
        return cls(())

    @classmethod
    def real_line(cls) -> "ThresholdSet":
        return cls(((-math.inf, math.inf),))

    @property
    def boundaries(self) -> list:
        pts = []
        for lo, hi in self.intervals:
            pts.extend(p for p in (lo, hi) if math.isfinite(p))
        return pts

    def contains(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        out = np.zeros(x.shape, dtype=bool)
        for lo, hi in self.intervals:
            out |= (x > lo) & (x < hi)
        return out

    def with_boundary(self, index: int, value: float) -> "ThresholdSet":
        """Copy with the ``index``-th finite boundary moved to ``value``."""
        flat = [list(iv) for iv in self.intervals]
        k = 0
        for iv in flat:
            for j in (0, 1):
                if math.isfinite(iv[j]):
                    if k == index:
                        iv[j] = value
                        return ThresholdSet(tuple(tuple(v) for v in flat))
                    k += 1
        raise IndexError(index)


# -- densities ---------------------------------------------------------------


def _gauss_logpdf(x, mean, var):
    return -0.5 * (_LOG_2PI + math.log(var) + (x - mean) ** 2 / var)


def _normal_mass(lo, hi, mean, sd):
    """P(lo < N(mean, sd^2) < hi), accurate in either tail."""
    a = (np.asarray(lo, dtype=float) - mean) / sd
    b = (np.asarray(hi, dtype=float) - mean) / sd
    left = special.ndtr(b) - special.ndtr(a)
    right = special.ndtr(-a) - special.ndtr(-b)
    return np.where(a > 0, right, left)


def _null_logpdf(model, x):
    return _gauss_logpdf(np.asarray(x, dtype=float), 0.0, model.null_variance)


def null_density(model: MixtureModel, x):
    out = np.exp(_null_logpdf(model, x))
    return float(out) if np.ndim(x) == 0 else out


def null_cdf(model: MixtureModel, x):
    out = special.ndtr(np.asarray(x, dtype=float) / math.sqrt(model.null_variance))
    return float(out) if np.ndim(x) == 0 else out


def _quad_pieces(f: DistributionSpec):
    lo, hi = f.support
    sd = math.sqrt(f.variance) if f.variance > 0 else 1.0
    lo = lo if math.isfinite(lo) else f.mean - 40 * sd
    hi = hi if math.isfinite(hi) else f.mean + 40 * sd
    edges = [lo, *[b for b in f.breakpoints if lo < b < hi], hi]
    return list(zip(edges[:-1], edges[1:]))


def _custom_alt_logpdf(model, x, tol=1e-10, max_nodes=4096):
    # log of E_U[phi(x - sqrt(rho) U)] by Gauss-Legendre per smooth piece,
    # doubling the node count until successive estimates agree
    x = np.atleast_1d(np.asarray(x, dtype=float))
    s = math.sqrt(model.rho)
    var = model.null_variance
    pieces = _quad_pieces(model.f)

    def estimate(nodes):
        t, w = np.polynomial.legendre.leggauss(nodes)
        terms = []
        for a, b in pieces:
            u = 0.5 * (b - a) * t + 0.5 * (a + b)
            with np.errstate(divide="ignore"):
                logw = np.log(0.5 * (b - a) * w) + np.log(model.f.pdf(u))
            terms.append(logw[None, :] + _gauss_logpdf(x[:, None], s * u[None, :], var))
        return special.logsumexp(np.concatenate(terms, axis=1), axis=1)

    nodes = 64
    prev = estimate(nodes)
    while nodes < max_nodes:
        nodes *= 2
        cur = estimate(nodes)
        err = float(np.max(np.abs(cur - prev)))
        if err < tol:
            return cur
        prev = cur
    raise QuadratureError("convolution quadrature for the alternative density did not converge", err)


def _alt_logpdf(model, x):
    x = np.asarray(x, dtype=float)
    f = model.f
    if model.rho == 0:
        return _null_logpdf(model, x)
    if f.kind == "gaussian":
        return _gauss_logpdf(x, model.alt_mean, model.alt_variance)
    s = math.sqrt(model.rho)
    if f.kind == "discrete":
        comps = [
            math.log(w) + _gauss_logpdf(x, s * a, model.null_variance)
            for a, w in zip(f.atoms, f.weights)
            if w > 0
        ]
        return special.logsumexp(np.stack(comps), axis=0)
    out = _custom_alt_logpdf(model, x)
    return out if x.ndim else out[0]


def alt_density(model: MixtureModel, x):
    """Density of ``W + sqrt(rho) U``."""
    out = np.exp(_alt_logpdf(model, x))
    return float(out) if np.ndim(x) == 0 else out


def _custom_alt_mass(model, lo, hi, tol=1e-11):
    s = math.sqrt(model.rho)
    sd = math.sqrt(model.null_variance)
    total, err = 0.0, 0.0
    for a, b in _quad_pieces(model.f):
        val, e = integrate.quad(
            lambda u: model.f.pdf(u) * _normal_mass(lo, hi, s * u, sd),
            a,
            b,
            epsabs=tol,
            epsrel=1e-12,
            limit=200,
        )
        total += val
        err += e
    if err > 1e-9:
        raise QuadratureError("alternative interval probability", err)
    return float(total)


def _alt_mass(model, lo, hi) -> float:
    f = model.f
    if model.rho == 0:
        return float(_normal_mass(lo, hi, 0.0, math.sqrt(model.null_variance)))
    if f.kind == "gaussian":
        return float(_normal_mass(lo, hi, model.alt_mean, math.sqrt(model.alt_variance)))
    if f.kind == "discrete":
        s = math.sqrt(model.rho)
        sd = math.sqrt(model.null_variance)
        return float(sum(w * _normal_mass(lo, hi, s * a, sd) for a, w in zip(f.atoms, f.weights)))
    return _custom_alt_mass(model, lo, hi)


def alt_cdf(model: MixtureModel, x):
    xs = np.atleast_1d(np.asarray(x, dtype=float))
    out = np.array([_alt_mass(model, -math.inf, v) for v in xs])
    return float(out[0]) if np.ndim(x) == 0 else out


def log_likelihood_ratio(model: MixtureModel, x):
    """``log(omega f1(x)) - log((1 - omega) f0(x))``; positive means accept."""
    prior = math.log(model.omega) - math.log1p(-model.omega)
    return prior + _alt_logpdf(model, x) - _null_logpdf(model, x)


# -- Bayes region -------------------------------------------------------------


def _scan_roots(g, lo, hi, points):
    xs = np.linspace(lo, hi, points)
    pos = np.asarray(g(xs)) > 0
    idx = np.flatnonzero(pos[1:] != pos[:-1])
    roots = []
    for i in idx:
        roots.append(
            optimize.brentq(lambda v: float(g(v)), xs[i], xs[i + 1], xtol=1e-13, rtol=4 * np.finfo(float).eps)
        )
    return roots, bool(pos[0]), bool(pos[-1])


def optimal_threshold_set(
    model: MixtureModel,
    *,
    grid_points: int = 10_000,
    window_sd: float = 8.0,
    max_widen: int = 3,
) -> ThresholdSet:
    """Bayes acceptance region ``{x : omega f1(x) > (1 - omega) f0(x)}``.

    The scan window spans ``window_sd`` standard deviations of both
    hypotheses.  It is doubled (at most ``max_widen`` times, then it gives
    up) while a wider scan finds new boundaries or the sign of the ratio
    at the window edge disagrees with its sign at the farthest reach.  Ties go to the null.
    """
    g = lambda v: log_likelihood_ratio(model, v)  # noqa: E731
    sd = math.sqrt(max(model.null_variance, model.alt_variance))
    center_lo = min(0.0, model.alt_mean)
    center_hi = max(0.0, model.alt_mean)
    half = window_sd * sd
    points = grid_points
    roots, left_pos, right_pos = _scan_roots(g, center_lo - half, center_hi + half, points)
    reach = half * 2**max_widen
    far = (bool(g(center_lo - reach) > 0), bool(g(center_hi + reach) > 0))
    for attempt in range(max_widen + 1):
        wider = _scan_roots(g, center_lo - 2 * half, center_hi + 2 * half, 2 * points)
        if len(wider[0]) == len(roots) and (left_pos, right_pos) == far:
            break
        if attempt == max_widen:
            raise QuadratureError("threshold scan window kept gaining boundaries", half)
        half, points = 2 * half, 2 * points
        roots, left_pos, right_pos = wider

    edges = [-math.inf, *roots, math.inf]
    intervals = []
    for k, (a, b) in enumerate(zip(edges[:-1], edges[1:])):
        if k == 0:
            positive = left_pos
        elif k == len(edges) - 2:
            positive = right_pos
        else:
            positive = bool(g(0.5 * (a + b)) > 0)
        if not positive:
            continue
        if intervals and intervals[-1][1] == a:
            intervals[-1] = (intervals[-1][0], b)
        else:
            intervals.append((a, b))
    return ThresholdSet(tuple(intervals))


def error_probability(model: MixtureModel, t_set: ThresholdSet) -> float:
    """``P(Z_hat != Z)`` for the rule "declare Z = 1 iff X in t_set"."""
    sd0 = math.sqrt(model.null_variance)
    false_alarm = sum(float(_normal_mass(lo, hi, 0.0, sd0)) for lo, hi in t_set.intervals)
    detect = sum(_alt_mass(model, lo, hi) for lo, hi in t_set.intervals)
    miss = 1.0 - detect
    return (1 - model.omega) * false_alarm + model.omega * miss


def epsilon(model: MixtureModel, t_set: ThresholdSet | None = None) -> float:
    """Minimal error probability of the scalar test."""
    if t_set is None:
        t_set = optimal_threshold_set(model)
    return error_probability(model, t_set)


def _sample_alt(model, count, rng):
    from .core import sample

    w = rng.normal(0.0, math.sqrt(model.null_variance), count)
    return w + math.sqrt(model.rho) * sample(model.f, count, rng)


def monte_carlo_error(model: MixtureModel, t_set: ThresholdSet, draws: int, seed) -> tuple:
    """Simulate ``(Z, X)`` and score ``t_set``; returns ``(estimate, stderr)``."""
    rng = np.random.default_rng(seed)
    z = rng.random(draws) < model.omega
    x = rng.normal(0.0, math.sqrt(model.null_variance), draws)
    n1 = int(z.sum())
    x[z] = _sample_alt(model, n1, rng)
    wrong = t_set.contains(x) != z
    p = float(wrong.mean())
    return p, math.sqrt(max(p * (1 - p), 1e-300) / draws)
