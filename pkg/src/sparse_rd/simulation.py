"""Monte Carlo realizations of the random source and the two decoders.

The thresholding decoder back-projects the samples, ``u_hat = B^T A^T y``,
and rescales by ``1 / sqrt(m/n)`` so that with ``A`` i.i.d. ``N(0, 1/n)`` the
coordinates follow the scalar mixture used to build the threshold set
(``W`` off the support, ``W + sqrt(rho) U`` on it).
"""

from __future__ import annotations

import itertools
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass
from typing import Iterable, Optional, Sequence

import numpy as np

from .core import DistributionSpec, SparseRDError, SparsityConfig, ceil_rate, sample
from .freeprob import haar_orthogonal
from .hypothesis import MixtureModel, ThresholdSet, epsilon, optimal_threshold_set

__all__ = [
    "SourceInstance",
    "SampleSet",
    "TrialResult",
    "ExperimentResult",
    "RecoveryError",
    "NoMatchError",
    "MultipleMatchError",
    "EnumerationGuardError",
    "hamming_distortion",
    "gen_instance",
    "gen_sampling_matrix",
    "measure",
    "back_projection",
    "thresholding_estimate",
    "run_trial",
    "run_experiment",
    "discrete_one_sample_recover",
    "discrete_demo",
    "ENUMERATION_LIMIT",
]

ENUMERATION_LIMIT = 10**7


@dataclass(frozen=True)
class SourceInstance:
    n: int
    support: tuple
    u: np.ndarray
    basis: Optional[np.ndarray]  # None means the identity
    x: np.ndarray

    @property
    def k(self) -> int:
        return len(self.support)


@dataclass(frozen=True)
class SampleSet:
    a: np.ndarray
    y: np.ndarray


@dataclass(frozen=True)
class TrialResult:
    distortion_count: int
    normalized_distortion: float
    exceeded: bool
    seed: int


@dataclass
class ExperimentResult:
    trials: list
    n: int
    m: int
    k: int
    rho: float
    alpha: float
    omega: float
    epsilon: float
    threshold_set: ThresholdSet

    @property
    def mean_distortion(self) -> float:
        return float(np.mean([t.normalized_distortion for t in self.trials]))

    @property
    def std_distortion(self) -> float:
        vals = [t.normalized_distortion for t in self.trials]
        return float(np.std(vals, ddof=1)) if len(vals) > 1 else 0.0

    @property
    def error_probability(self) -> float:
        return sum(t.exceeded for t in self.trials) / len(self.trials)

    def summary(self) -> dict:
        return {
            "n": self.n,
            "m": self.m,
            "k": self.k,
            "rho": self.rho,
            "alpha": self.alpha,
            "omega": self.omega,
            "trials": len(self.trials),
            "epsilon": self.epsilon,
            "mean_normalized_distortion": self.mean_distortion,
            "std_normalized_distortion": self.std_distortion,
            "empirical_error_probability": self.error_probability,
            "threshold_set": [list(iv) for iv in self.threshold_set.intervals],
        }


class RecoveryError(SparseRDError):
    pass


class NoMatchError(RecoveryError):
    pass


class MultipleMatchError(RecoveryError):
    def __init__(self, message, candidates):
        super().__init__(message)
        self.candidates = candidates


class EnumerationGuardError(ValueError):
    pass


def hamming_distortion(s: Iterable[int], s_hat: Iterable[int]) -> int:
    """``|s union s_hat| - |s intersect s_hat|``."""
    return len(set(s) ^ set(s_hat))


def gen_instance(
    config: SparsityConfig, f: DistributionSpec, basis_kind: str = "haar", seed=None
) -> SourceInstance:
    if basis_kind not in ("haar", "identity"):
        raise ValueError(f"basis_kind must be 'haar' or 'identity', got {basis_kind!r}")
    rng = np.random.default_rng(seed)
    n, k = config.n, config.k
    support = np.sort(rng.choice(n, size=k, replace=False))
    u = np.zeros(n)
    u[support] = sample(f, k, rng)
    if basis_kind == "identity":
        return SourceInstance(n, tuple(int(i) for i in support), u, None, u.copy())
    b = haar_orthogonal(n, rng)
    return SourceInstance(n, tuple(int(i) for i in support), u, b, b[:, support] @ u[support])


def gen_sampling_matrix(m: int, n: int, seed) -> np.ndarray:
    """``m x n`` matrix with i.i.d. ``N(0, 1/n)`` entries."""
    if m < 1 or n < 1:
        raise ValueError("m and n must be positive")
    rng = np.random.default_rng(seed)
    return rng.standard_normal((m, n)) / math.sqrt(n)


def measure(instance: SourceInstance, a: np.ndarray) -> SampleSet:
    return SampleSet(a, a @ instance.x)


def back_projection(sample_set: SampleSet, basis: Optional[np.ndarray]) -> np.ndarray:
    """``B^T A^T y / sqrt(m/n)``."""
    m, n = sample_set.a.shape
    v = sample_set.a.T @ sample_set.y
    if basis is not None:
        v = basis.T @ v
    return v / math.sqrt(m / n)


def thresholding_estimate(sample_set: SampleSet, basis: Optional[np.ndarray], t_star: ThresholdSet) -> set:
    u_hat = back_projection(sample_set, basis)
    return set(np.flatnonzero(t_star.contains(u_hat)).tolist())


def run_trial(config, f, m, alpha, t_star, basis_kind, seed) -> TrialResult:
    rng = np.random.default_rng(seed)
    inst = gen_instance(config, f, basis_kind, rng)
    a = gen_sampling_matrix(m, config.n, rng)
    est = thresholding_estimate(measure(inst, a), inst.basis, t_star)
    d = hamming_distortion(inst.support, est)
    return TrialResult(d, d / config.n, d > alpha * config.k, int(seed))


def _trial_job(args):
    return run_trial(*args)


def run_experiment(
    config: SparsityConfig,
    f: DistributionSpec,
    rho: float,
    alpha: float,
    trials: int,
    seed: int,
    basis_kind: str = "haar",
    workers: int = 1,
) -> ExperimentResult:
    """Repeat the thresholding trial with seeds ``seed, seed + 1, ...``.

    The threshold set is built once at the finite-size rate ``m / n``.
    Results come back in seed order whatever ``workers`` is.
    """
    if trials < 1:
        raise ValueError("trials must be at least 1")
    if not 0 <= alpha <= 1:
        raise ValueError("alpha must lie in [0, 1]")
    m = ceil_rate(rho, config.n)
    model = MixtureModel(m / config.n, config.omega, f)
    t_star = optimal_threshold_set(model)
    jobs = [(config, f, m, alpha, t_star, basis_kind, seed + i) for i in range(trials)]
    if workers > 1:
        with ProcessPoolExecutor(workers) as pool:
            results = list(pool.map(_trial_job, jobs))
    else:
        results = [_trial_job(j) for j in jobs]
    return ExperimentResult(
        results, config.n, m, config.k, rho, alpha, config.omega, epsilon(model, t_star), t_star
    )


def discrete_one_sample_recover(
    y,
    a: np.ndarray,
    basis: Optional[np.ndarray],
    k: int,
    sigma: Sequence[float],
    tolerance: Optional[float] = None,
) -> np.ndarray:
    """Recover a ``k``-sparse ``u`` with entries in ``sigma`` from one sample.

    Supports are enumerated lexicographically and, for each, every value
    assignment in odometer order.  Exactly one candidate must land within
    ``tolerance`` of ``y`` (default ``1e-9 * |y|``).
    """
    a = np.atleast_2d(np.asarray(a, dtype=float))
    if a.shape[0] != 1:
        raise ValueError("exactly one sample row is expected")
    y = float(np.ravel(y)[0])
    n = a.shape[1]
    alphabet = np.asarray(sigma, dtype=float)
    if np.any(alphabet == 0):
        raise ValueError("alphabet must exclude 0")
    if not 1 <= k <= n:
        raise ValueError("need 1 <= k <= n")
    count = math.comb(n, k) * alphabet.size**k
    if count > ENUMERATION_LIMIT:
        raise EnumerationGuardError(
            f"{count} candidates exceed the enumeration limit {ENUMERATION_LIMIT}; reduce n, k or the alphabet"
        )
    if tolerance is None:
        tolerance = 1e-9 * abs(y)
    row = a[0] if basis is None else a[0] @ basis
    values = np.array(list(itertools.product(alphabet, repeat=k)))  # odometer order
    matches = []
    for supp in itertools.combinations(range(n), k):
        proj = values @ row[list(supp)]
        for j in np.flatnonzero(np.abs(proj - y) < tolerance):
            matches.append((supp, values[j]))
    if not matches:
        raise NoMatchError(f"no candidate within {tolerance:.3g} of y={y!r}")
    if len(matches) > 1:
        raise MultipleMatchError(f"{len(matches)} candidates within {tolerance:.3g} of y", matches)
    supp, vals = matches[0]
    u = np.zeros(n)
    u[list(supp)] = vals
    return u


def discrete_demo(n: int, k: int, sigma: Sequence[float], trials: int, seed: int, basis_kind: str = "haar") -> dict:
    """Draw ``u`` with i.i.d. uniform entries from ``sigma`` and decode from ``m = 1``."""
    from .core import discrete

    f = discrete(sigma)
    config = SparsityConfig.from_counts(n, k)
    outcomes = []
    for i in range(trials):
        rng = np.random.default_rng(seed + i)
        inst = gen_instance(config, f, basis_kind, rng)
        a = gen_sampling_matrix(1, n, rng)
        y = a @ inst.x
        try:
            u = discrete_one_sample_recover(y, a, inst.basis, k, sigma)
            status = "ok" if np.array_equal(u, inst.u) else "wrong"
        except MultipleMatchError:
            u, status = None, "multiple"
        except NoMatchError:
            u, status = None, "none"
        outcomes.append({"seed": seed + i, "status": status, "u": None if u is None else u.tolist(),
                         "truth": inst.u.tolist()})
    return {
        "n": n,
        "k": k,
        "alphabet": list(map(float, sigma)),
        "trials": trials,
        "successes": sum(o["status"] == "ok" for o in outcomes),
        "multiple_matches": sum(o["status"] == "multiple" for o in outcomes),
        "no_matches": sum(o["status"] == "none" for o in outcomes),
        "outcomes": outcomes,
    }


def trial_rows(result: ExperimentResult) -> list:
    return [asdict(t) for t in result.trials]
