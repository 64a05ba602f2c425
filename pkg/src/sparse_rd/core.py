"""Scalar information measures and the nonzero-value law ``F``.

Everything here is in nats.  The distribution descriptor carries exactly the
quantities the rate bounds consume (mean, variance, differential entropy, a
density and a sampler); it is not meant as a general probability library.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

__all__ = [
    "SparseRDError",
    "QuadratureError",
    "DistributionSpec",
    "SparsityConfig",
    "binary_entropy",
    "delta",
    "theta",
    "entropy_power",
    "sample",
    "gaussian",
    "discrete",
    "custom",
    "uniform",
    "laplace",
    "gaussian_family",
    "ceil_rate",
]

TWO_PI_E = 2.0 * math.pi * math.e


class SparseRDError(Exception):
    """Base class for numeric failures raised by this package."""


class QuadratureError(SparseRDError):
    """A numerical integral did not reach its requested tolerance."""

    def __init__(self, message: str, achieved: float):
        super().__init__(f"{message} (achieved tolerance {achieved:.3g})")
        self.achieved = achieved


@dataclass(frozen=True)
class DistributionSpec:
    """Law of the nonzero coefficients.

    ``kind`` is one of ``"gaussian"``, ``"discrete"`` or ``"custom"``.  Use the
    module-level constructors (:func:`gaussian`, :func:`discrete`,
    :func:`custom`, :func:`uniform`, :func:`laplace`) rather than building
    instances directly; they validate the invariants.
    """

    kind: str
    mean: float
    variance: float
    entropy: Optional[float] = None
    atoms: tuple = ()
    weights: tuple = ()
    density: Optional[Callable[[np.ndarray], np.ndarray]] = field(default=None, compare=False)
    sampler: Optional[Callable[[np.random.Generator, int], np.ndarray]] = field(
        default=None, compare=False
    )
    support: tuple = (-math.inf, math.inf)
    breakpoints: tuple = ()
    label: str = ""

    @property
    def has_density(self) -> bool:
        return self.kind != "discrete"

    @property
    def second_moment(self) -> float:
        return self.variance + self.mean**2

    @property
    def differential_entropy(self) -> Optional[float]:
        if self.kind == "gaussian":
            return 0.5 * math.log(TWO_PI_E * self.variance)
        if self.kind == "custom":
            return self.entropy
        return None

    def pdf(self, u):
        u = np.asarray(u, dtype=float)
        if self.kind == "gaussian":
            return np.exp(-0.5 * (u - self.mean) ** 2 / self.variance) / math.sqrt(
                2 * math.pi * self.variance
            )
        if self.kind == "custom":
            return np.asarray(self.density(u), dtype=float)
        raise ValueError("discrete distribution has no density")


def gaussian(mean: float, variance: float) -> DistributionSpec:
    if not (variance > 0 and math.isfinite(variance) and math.isfinite(mean)):
        raise ValueError(f"gaussian needs finite mean and positive variance, got {mean}, {variance}")
    return DistributionSpec(
        "gaussian", float(mean), float(variance), label=f"gaussian:{mean!r},{variance!r}"
    )


def discrete(support: Sequence[float], weights: Optional[Sequence[float]] = None) -> DistributionSpec:
    atoms = np.asarray(support, dtype=float)
    if atoms.ndim != 1 or atoms.size == 0:
        raise ValueError("discrete support must be a non-empty list")
    if np.any(atoms == 0):
        raise ValueError("discrete support must exclude 0")
    if not np.all(np.isfinite(atoms)):
        raise ValueError("discrete support must be finite")
    if weights is None:
        w = np.full(atoms.size, 1.0 / atoms.size)
    else:
        w = np.asarray(weights, dtype=float)
    if w.shape != atoms.shape or np.any(w < 0):
        raise ValueError("weights must be nonnegative and match the support")
    if abs(w.sum() - 1.0) > 1e-12:
        raise ValueError(f"weights sum to {w.sum()!r}, not 1")
    mean = float(np.dot(w, atoms))
    var = float(np.dot(w, (atoms - mean) ** 2))
    label = "discrete:" + ",".join(repr(float(a)) for a in atoms)
    label += ";" + ",".join(repr(float(x)) for x in w)
    return DistributionSpec(
        "discrete", mean, var, atoms=tuple(map(float, atoms)), weights=tuple(map(float, w)), label=label
    )


def custom(
    mean: float,
    variance: float,
    differential_entropy: float,
    density: Callable[[np.ndarray], np.ndarray],
    sampler: Callable[[np.random.Generator, int], np.ndarray],
    support: tuple = (-math.inf, math.inf),
    breakpoints: Sequence[float] = (),
    label: str = "custom",
) -> DistributionSpec:
    """Arbitrary density; the caller supplies its differential entropy.

    ``support`` bounds the density (used for quadrature) and ``breakpoints``
    lists interior points where it is not smooth.
    """
    if not (variance >= 0 and math.isfinite(variance) and math.isfinite(mean)):
        raise ValueError("custom distribution needs finite mean and variance")
    lo, hi = support
    if not lo < hi:
        raise ValueError("support must be a nonempty interval")
    return DistributionSpec(
        "custom",
        float(mean),
        float(variance),
        entropy=float(differential_entropy),
        density=density,
        sampler=sampler,
        support=(float(lo), float(hi)),
        breakpoints=tuple(sorted(float(b) for b in breakpoints if lo < b < hi)),
        label=label,
    )


def uniform(lo: float, hi: float) -> DistributionSpec:
    if not lo < hi:
        raise ValueError("uniform needs lo < hi")
    width = hi - lo

    def pdf(u):
        u = np.asarray(u, dtype=float)
        return np.where((u >= lo) & (u <= hi), 1.0 / width, 0.0)

    return custom(
        0.5 * (lo + hi),
        width**2 / 12.0,
        math.log(width),
        pdf,
        lambda rng, size: rng.uniform(lo, hi, size),
        support=(lo, hi),
        label=f"uniform:{float(lo)!r},{float(hi)!r}",
    )


def laplace(loc: float, scale: float) -> DistributionSpec:
    if not scale > 0:
        raise ValueError("laplace needs a positive scale")

    def pdf(u):
        u = np.asarray(u, dtype=float)
        return np.exp(-np.abs(u - loc) / scale) / (2 * scale)

    return custom(
        loc,
        2 * scale**2,
        1.0 + math.log(2 * scale),
        pdf,
        lambda rng, size: rng.laplace(loc, scale, size),
        breakpoints=(loc,),
        label=f"laplace:{float(loc)!r},{float(scale)!r}",
    )


def gaussian_family(mu: float) -> DistributionSpec:
    """``N(mu, 1 - mu^2)``; the point mass at 1 when ``mu == 1``."""
    if not 0 <= abs(mu) <= 1:
        raise ValueError("mu must lie in [-1, 1]")
    if abs(mu) == 1:
        return discrete([float(mu)], [1.0])
    return gaussian(mu, 1.0 - mu * mu)


@dataclass(frozen=True)
class SparsityConfig:
    omega: float
    n: int

    def __post_init__(self):
        if not 0 < self.omega < 1:
            raise ValueError(f"omega must lie in (0, 1), got {self.omega}")
        if self.n < 1:
            raise ValueError("n must be positive")
        if self.k < 1:
            raise ValueError(f"floor(omega*n) = 0 for omega={self.omega}, n={self.n}")

    @property
    def k(self) -> int:
        # guard against 0.35*20 = 6.9999... style products
        return math.floor(self.omega * self.n + 1e-9)

    @classmethod
    def from_counts(cls, n: int, k: int) -> "SparsityConfig":
        return cls(k / n, n)


def ceil_rate(rate: float, n: int) -> int:
    """Number of samples ``ceil(rate * n)``, robust to float products."""
    return math.ceil(rate * n - 1e-9)


def binary_entropy(p):
    """Binary entropy in nats, with ``H(0) = H(1) = 0``."""
    arr = np.asarray(p, dtype=float)
    if np.any((arr < 0) | (arr > 1)) or np.any(np.isnan(arr)):
        raise ValueError(f"probability out of range: {p}")
    with np.errstate(divide="ignore", invalid="ignore"):
        h = -arr * np.log(arr) - (1 - arr) * np.log1p(-arr)
    h = np.where((arr == 0) | (arr == 1), 0.0, h)
    return float(h) if np.ndim(p) == 0 else h


def delta(r):
    """``(1 - r)^(1 - 1/r)`` on ``(0, 1)``, equal to 1 at ``r = 1``."""
    arr = np.asarray(r, dtype=float)
    if np.any((arr <= 0) | (arr > 1)) or np.any(np.isnan(arr)):
        raise ValueError(f"delta is defined on (0, 1], got {r}")
    with np.errstate(divide="ignore", invalid="ignore"):
        out = np.exp((1 - 1 / arr) * np.log1p(-arr))
    out = np.where(arr == 1, 1.0, out)
    return float(out) if np.ndim(r) == 0 else out


def entropy_power(f: DistributionSpec) -> float:
    """``exp(2 h(F)) / (2 pi e)``; zero for a discrete ``F``.

    ``f.has_density`` tells the two cases apart.
    """
    h = f.differential_entropy
    if h is None:
        return 0.0
    return math.exp(2 * h) / TWO_PI_E


def theta(omega: float, f: DistributionSpec) -> float:
    """Entropy power of ``F`` normalized by the per-coordinate signal power."""
    if not 0 < omega < 1:
        raise ValueError(f"omega must lie in (0, 1), got {omega}")
    if not f.has_density:
        return 0.0
    return entropy_power(f) / (f.variance + (1 - omega) * f.mean**2)


def sample(f: DistributionSpec, count: int, seed) -> np.ndarray:
    """Draw ``count`` i.i.d. values from ``F``.

    ``seed`` may be an integer or an existing ``numpy.random.Generator``.
    """
    if count < 0:
        raise ValueError("count must be nonnegative")
    rng = np.random.default_rng(seed)
    if f.kind == "gaussian":
        return rng.normal(f.mean, math.sqrt(f.variance), count)
    if f.kind == "discrete":
        return rng.choice(np.asarray(f.atoms), size=count, p=np.asarray(f.weights))
    return np.asarray(f.sampler(rng, count), dtype=float)
