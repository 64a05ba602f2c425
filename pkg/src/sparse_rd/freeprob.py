"""Spectral measures, Stieltjes/R-transforms and the free compression identity.

A :class:`SpectralMeasure` is a finite set of atoms plus an optional density
on closed intervals.  Integrals against the density use the substitution
``x = a + (b - a) sin^2(t / 2)``, which removes the square-root edge
behaviour of Marchenko-Pastur type laws and leaves at most an integrable
logarithmic singularity for QUADPACK to handle.

Sign conventions follow ``S(z) = int 1 / (x - z) dmu(x)`` and
``R(z) = S^{-1}(-z) - 1/z``.  With ``G = -S`` this is the usual
``G^{-1}(z) = R(z) + 1/z``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy import integrate, optimize, stats

from .core import (
    DistributionSpec,
    QuadratureError,
    SparseRDError,
    SparsityConfig,
    ceil_rate,
    delta,
    theta,
)

__all__ = [
    "InversionError",
    "SpectralMeasure",
    "SpectralLimitPair",
    "free_poisson",
    "mp_law",
    "point_mass",
    "add_zero_atom",
    "drop_zero_atom",
    "dilate",
    "stieltjes",
    "r_transform",
    "compress",
    "m_side_limit",
    "log_potential",
    "limit_pair",
    "mutual_info_bound",
    "haar_orthogonal",
    "empirical_gram_spectrum",
    "empirical_projected_spectrum",
    "geometric_mean_eigenvalue",
    "ks_distance",
    "MAX_EIGEN_N",
]

MAX_EIGEN_N = 4000
_QUAD = dict(epsabs=1e-12, epsrel=1e-11, limit=400)


class InversionError(SparseRDError):
    """No root of ``S(w) = -z`` on the attempted real interval."""


@dataclass(frozen=True)
class SpectralMeasure:
    atoms: tuple = ()
    density: Optional[Callable[[np.ndarray], np.ndarray]] = field(default=None, compare=False)
    support: tuple = ()
    # (rate, jump) when the measure is a free Poisson law
    family: Optional[tuple] = None
    # kinks of a tabulated density, passed to the quadrature
    knots: tuple = ()

    def __post_init__(self):
        if any(w < 0 for _, w in self.atoms):
            raise ValueError("atom weights must be nonnegative")
        if self.density is not None and not self.support:
            raise ValueError("a density needs a support")

    @property
    def zero_atom(self) -> float:
        return sum(w for x, w in self.atoms if x == 0)

    @property
    def hull(self) -> tuple:
        pts = [x for x, w in self.atoms if w > 0]
        for a, b in self.support:
            pts += [a, b]
        return min(pts), max(pts)

    def integrate(self, g: Callable, *, complex_valued: bool = False, with_error: bool = False):
        """``int g dmu`` with atoms summed exactly and the density by quadrature."""
        total = sum(w * g(x) for x, w in self.atoms if w > 0)
        err = 0.0
        if self.density is not None:
            for a, b in self.support:
                jd = _jacobian_density(self.density, a, b)
                val, e = integrate.quad(
                    lambda t: jd(t) * g(_sub(a, b, t)),
                    0.0,
                    math.pi,
                    complex_func=complex_valued,
                    **self._quad_opts(a, b, math.pi),
                )
                total = total + val
                err += abs(e)
        if with_error:
            return total, err
        return total

    def _quad_opts(self, a, b, top):
        if not self.knots:
            return _QUAD
        ts = [_unsub(a, b, x) for x in self.knots if a < x < b]
        ts = [t for t in ts if 0 < t < top]
        return dict(_QUAD, points=ts, limit=max(_QUAD["limit"], 4 * len(ts) + 50))

    def mass(self) -> float:
        return float(np.real(self.integrate(lambda x: 1.0)))

    def mean(self) -> float:
        return float(np.real(self.integrate(lambda x: x)))

    def cdf(self, x):
        xs = np.atleast_1d(np.asarray(x, dtype=float))
        out = np.empty(xs.shape)
        for i, v in enumerate(xs):
            acc = sum(w for loc, w in self.atoms if loc <= v)
            if self.density is not None:
                for a, b in self.support:
                    if v <= a:
                        continue
                    top = math.pi if v >= b else _unsub(a, b, v)
                    jd = _jacobian_density(self.density, a, b)
                    acc += integrate.quad(jd, 0.0, top, **self._quad_opts(a, b, top))[0]
            out[i] = acc
        return out if np.ndim(x) else float(out[0])


def _sub(a, b, t):
    s = np.sin(0.5 * t)
    return a + (b - a) * s * s


def _unsub(a, b, x):
    return 2 * math.asin(math.sqrt(min(1.0, max(0.0, (x - a) / (b - a)))))


def _jacobian_density(density, a, b):
    def h(t):
        return float(density(_sub(a, b, t))) * 0.5 * (b - a) * math.sin(t)

    return h


# -- constructors --------------------------------------------------------------


def point_mass(c: float) -> SpectralMeasure:
    return SpectralMeasure(atoms=((float(c), 1.0),))


def free_poisson(rate: float, jump: float = 1.0) -> SpectralMeasure:
    """Free Poisson law with R-transform ``rate * jump / (1 - jump z)``."""
    if not (rate > 0 and jump > 0):
        raise ValueError("free Poisson needs positive rate and jump")
    a = jump * (1 - math.sqrt(rate)) ** 2
    b = jump * (1 + math.sqrt(rate)) ** 2

    def dens(x):
        x = np.asarray(x, dtype=float)
        with np.errstate(divide="ignore", invalid="ignore"):
            return np.sqrt(np.maximum((x - a) * (b - x), 0.0)) / (2 * math.pi * jump * x)

    atoms = ((0.0, 1.0 - rate),) if rate < 1 else ()
    return SpectralMeasure(atoms=atoms, density=dens, support=((a, b),), family=(float(rate), float(jump)))


def mp_law(r: float) -> SpectralMeasure:
    """Marchenko-Pastur law of ratio ``r``: the limiting spectrum of ``A A^T``."""
    if not 0 < r <= 1:
        raise ValueError(f"mp_law needs 0 < r <= 1, got {r}")
    return free_poisson(1.0 / r, r)


def add_zero_atom(measure: SpectralMeasure, keep: float) -> SpectralMeasure:
    """``(1 - keep) delta_0 + keep * measure``."""
    if not 0 < keep <= 1:
        raise ValueError("keep must lie in (0, 1]")
    if keep == 1:
        return measure
    atoms = {}
    for x, w in measure.atoms:
        atoms[x] = atoms.get(x, 0.0) + keep * w
    atoms[0.0] = atoms.get(0.0, 0.0) + (1 - keep)
    dens = None
    if measure.density is not None:
        base = measure.density
        dens = lambda x: keep * base(x)  # noqa: E731
    family = None
    if measure.family is not None and not measure.atoms:
        rate, jump = measure.family
        if abs(keep * rate - 1) < 1e-14:
            family = (keep, rate * jump)
    return SpectralMeasure(tuple(sorted(atoms.items())), dens, measure.support, family, measure.knots)


def drop_zero_atom(measure: SpectralMeasure) -> SpectralMeasure:
    """Condition on the nonzero eigenvalues (rank accounting)."""
    w0 = measure.zero_atom
    if w0 >= 1:
        raise ValueError("measure is concentrated at zero")
    keep = 1.0 - w0
    atoms = tuple((x, w / keep) for x, w in measure.atoms if x != 0)
    dens = None
    if measure.density is not None:
        base = measure.density
        dens = lambda x: base(x) / keep  # noqa: E731
    family = None
    if measure.family is not None and w0 > 0:
        rate, jump = measure.family
        family = (1.0 / rate, rate * jump)
    return SpectralMeasure(atoms, dens, measure.support, family, measure.knots)


def dilate(measure: SpectralMeasure, c: float) -> SpectralMeasure:
    """Law of ``c X`` for ``X ~ measure``, ``c > 0``."""
    if not c > 0:
        raise ValueError("dilation factor must be positive")
    atoms = tuple((c * x, w) for x, w in measure.atoms)
    dens = None
    if measure.density is not None:
        base = measure.density
        dens = lambda x: base(np.asarray(x) / c) / c  # noqa: E731
    support = tuple((c * a, c * b) for a, b in measure.support)
    family = None
    if measure.family is not None:
        family = (measure.family[0], measure.family[1] * c)
    return SpectralMeasure(atoms, dens, support, family, tuple(c * x for x in measure.knots))


# -- transforms ---------------------------------------------------------------


def stieltjes(measure: SpectralMeasure, z: complex) -> complex:
    """``S(z) = int 1 / (x - z) dmu(x)``."""
    z = complex(z)
    if z.imag == 0:
        lo, hi = measure.hull
        inside = any(a <= z.real <= b for a, b in measure.support)
        on_atom = any(x == z.real for x, w in measure.atoms if w > 0)
        if inside or on_atom:
            raise ValueError(f"real z={z.real} lies on the support")
        val = measure.integrate(lambda x: 1.0 / (x - z.real))
        return complex(val)
    return complex(measure.integrate(lambda x: 1.0 / (x - z), complex_valued=True))


def _g_real(measure, w):
    # G(w) = -S(w) for real w off the support
    return -float(np.real(measure.integrate(lambda x: 1.0 / (x - w))))


def r_transform(measure: SpectralMeasure, z: float) -> float:
    """``S^{-1}(-z) - 1/z`` by real root finding outside the support.

    Positive ``z`` is inverted to the right of the support and negative ``z``
    to the left, the branches that connect continuously to ``z = 0``.
    """
    z = float(z)
    if z == 0:
        raise ValueError("r_transform needs z != 0")
    lo, hi = measure.hull
    scale = max(1.0, abs(lo), abs(hi))
    eps = 1e-9 * scale
    m1 = measure.mean()
    if z > 0:
        near = hi + eps
        if _g_real(measure, near) <= z:
            raise InversionError(f"S(w) = {-z} has no root on ({near}, inf): z beyond the analytic range")
        far = max(hi, m1) + 2.0 / z
        while _g_real(measure, far) >= z:
            far = hi + 2 * (far - hi)
            if far - hi > 1e12 * scale:
                raise InversionError(f"no bracket for S(w) = {-z} on ({near}, {far})")
        a, b = near, far
    else:
        near = lo - eps
        if _g_real(measure, near) >= z:
            raise InversionError(f"S(w) = {-z} has no root on (-inf, {near}): z beyond the analytic range")
        far = min(lo, m1) + 2.0 / z
        while _g_real(measure, far) <= z:
            far = lo - 2 * (lo - far)
            if lo - far > 1e12 * scale:
                raise InversionError(f"no bracket for S(w) = {-z} on ({far}, {near})")
        a, b = far, near
    w = optimize.brentq(lambda v: _g_real(measure, v) - z, a, b, xtol=1e-14, rtol=1e-15, maxiter=200)
    return w - 1.0 / z


def compress(mu_tilde: SpectralMeasure, omega: float, *, numeric: bool = False, **numeric_opts) -> SpectralMeasure:
    """Measure ``nu`` with ``R_nu(z) = R_mu(omega z)``.

    Free Poisson inputs map to free Poisson outputs (rate ``/ omega``, jump
    ``* omega``).  Anything else, or ``numeric=True``, goes through
    :func:`_compress_numeric`.
    """
    if not 0 < omega <= 1:
        raise ValueError("omega must lie in (0, 1]")
    if omega == 1:
        return mu_tilde
    if mu_tilde.family is not None and not numeric:
        rate, jump = mu_tilde.family
        return free_poisson(rate / omega, jump * omega)
    return _compress_numeric(mu_tilde, omega, **numeric_opts)


def _discretize(measure, nodes):
    locs, weights = [], []
    for x, w in measure.atoms:
        if w > 0:
            locs.append(x)
            weights.append(w)
    if measure.density is not None:
        t, gw = np.polynomial.legendre.leggauss(nodes)
        t = 0.5 * math.pi * (t + 1)
        gw = 0.5 * math.pi * gw
        for a, b in measure.support:
            x = _sub(a, b, t)
            wt = gw * np.asarray(measure.density(x)) * 0.5 * (b - a) * np.sin(t)
            locs.extend(x)
            weights.extend(wt)
    return np.asarray(locs), np.asarray(weights)


def _compress_numeric(
    mu_tilde: SpectralMeasure,
    omega: float,
    grid: int = 400,
    eta: Optional[float] = None,
    nodes: int = 1500,
    max_iter: int = 20_000,
) -> SpectralMeasure:
    # Subordination: h = G_mu(w + (1 - omega) / h), G_nu(w) = h / omega,
    # solved at heights eta and 2 eta above a real grid.  The density read
    # off at height eta is the Cauchy-smoothed one, biased to first order
    # in eta; the two heights are combined to cancel that term.
    locs, wts = _discretize(mu_tilde, nodes)
    lo, hi = mu_tilde.hull
    lo = min(lo, 0.0)
    eta = 2e-3 * (hi - lo) if eta is None else eta
    xs = np.linspace(lo, hi, grid)
    w0 = max(0.0, 1.0 - (1.0 - mu_tilde.zero_atom) / omega)

    def g_mu(v):
        return (wts[None, :] / (v[:, None] - locs[None, :])).sum(axis=1)

    def smoothed_density(height):
        w = xs + 1j * height
        h = g_mu(w)
        for _ in range(max_iter):
            nxt = g_mu(w + (1 - omega) / h)
            step = float(np.max(np.abs(nxt - h)))
            h = nxt
            if step < 1e-12:
                break
        else:
            raise QuadratureError("compression fixed point did not converge", step)
        d = -(h / omega).imag / math.pi
        # the zero atom's own Cauchy bump
        return d - w0 * height / (math.pi * (xs**2 + height**2))

    dens = np.maximum(2 * smoothed_density(eta) - smoothed_density(2 * eta), 0.0)
    table = lambda x: np.interp(x, xs, dens, left=0.0, right=0.0)  # noqa: E731
    knots = tuple(float(x) for x in xs[1:-1])
    area = SpectralMeasure((), table, ((lo, hi),), knots=knots).mass()
    dens *= (1.0 - w0) / area
    atoms = ((0.0, w0),) if w0 > 0 else ()
    return SpectralMeasure(atoms, table, ((lo, hi),), knots=knots)


def m_side_limit(nu_tilde: SpectralMeasure, omega: float) -> SpectralMeasure:
    """Limit of the spectrum of ``(1/omega) A B_S B_S^T A^T`` from the k-side law.

    The ``m x m`` matrix shares the nonzero eigenvalues of the ``k x k`` one,
    so its law is ``nu_tilde`` conditioned on being nonzero, dilated by
    ``1/omega``.
    """
    return dilate(drop_zero_atom(nu_tilde), 1.0 / omega)


def log_potential(measure: SpectralMeasure) -> float:
    """``exp(int log x dmu)``; zero when there is mass at zero."""
    if measure.zero_atom > 0:
        return 0.0
    lo, _ = measure.hull
    if lo < 0:
        raise ValueError("log potential needs a measure on [0, inf)")
    val, err = measure.integrate(lambda x: math.log(x) if x > 0 else -math.inf, with_error=True)
    val = float(np.real(val))
    if not math.isfinite(val) or err > 1e-8:
        raise QuadratureError("log-moment integral diverged or did not converge", err)
    return math.exp(val)


@dataclass(frozen=True)
class SpectralLimitPair:
    mu: SpectralMeasure
    nu: SpectralMeasure
    g_mu: float
    g_nu: float


def limit_pair(rho: float, omega: float) -> SpectralLimitPair:
    """Limits of ``A A^T`` and of ``(1/omega) A B_S B_S^T A^T`` for Gaussian ``A``."""
    if not 0 < rho <= omega < 1:
        raise ValueError("need 0 < rho <= omega < 1")
    mu = mp_law(rho)
    nu = m_side_limit(compress(add_zero_atom(mu, rho), omega), omega)
    return SpectralLimitPair(mu, nu, log_potential(mu), log_potential(nu))


def mutual_info_bound(rho: float, omega: float, f: DistributionSpec) -> float:
    """Per-coordinate upper bound on ``I(A X; S | B) / n`` with Gaussian ``A``."""
    th = theta(omega, f)
    if th == 0:
        return math.inf
    return 0.5 * rho * (math.log(delta(rho)) - math.log(delta(rho / omega)) - math.log(th))


# -- random matrices ------------------------------------------------------------


def haar_orthogonal(n: int, seed) -> np.ndarray:
    """Haar-distributed orthogonal matrix via QR with sign-fixed diagonal."""
    rng = np.random.default_rng(seed)
    q, r = np.linalg.qr(rng.standard_normal((n, n)))
    d = np.sign(np.diag(r))
    d[d == 0] = 1.0
    return q * d[None, :]


def _check_size(n):
    if n > MAX_EIGEN_N:
        raise ValueError(f"n={n} exceeds the eigen-solve cap of {MAX_EIGEN_N}; pick a smaller n")


def empirical_gram_spectrum(n: int, rho: float, seed) -> np.ndarray:
    """Sorted eigenvalues of ``A A^T`` with ``A`` i.i.d. ``N(0, 1/n)``."""
    _check_size(n)
    rng = np.random.default_rng(seed)
    m = ceil_rate(rho, n)
    a = rng.standard_normal((m, n)) / math.sqrt(n)
    return np.linalg.eigvalsh(a @ a.T)


def empirical_projected_spectrum(n: int, rho: float, omega: float, seed) -> np.ndarray:
    """Sorted eigenvalues of ``A B_S B_S^T A^T`` (``m x m``).

    ``A`` is i.i.d. ``N(0, 1/n)``, ``S`` a uniform ``k``-subset and ``B``
    Haar.  For ``rho > omega`` the result has ``m - k`` extra zeros.
    """
    if n < 100:
        raise ValueError("n must be at least 100")
    _check_size(n)
    rng = np.random.default_rng(seed)
    k = SparsityConfig(omega, n).k
    m = ceil_rate(rho, n)
    a = rng.standard_normal((m, n)) / math.sqrt(n)
    support = np.sort(rng.choice(n, size=k, replace=False))
    b = haar_orthogonal(n, rng)
    ab = a @ b[:, support]
    return np.linalg.eigvalsh(ab @ ab.T)


def geometric_mean_eigenvalue(eigs, tol: float = 1e-10) -> float:
    """``exp(mean log lambda)`` over the positive eigenvalues."""
    eigs = np.asarray(eigs, dtype=float)
    pos = eigs[eigs > tol * max(1.0, float(np.max(np.abs(eigs))))]
    return float(np.exp(np.mean(np.log(pos))))


def ks_distance(samples, measure: SpectralMeasure) -> float:
    return float(stats.kstest(np.asarray(samples, dtype=float), measure.cdf).statistic)
