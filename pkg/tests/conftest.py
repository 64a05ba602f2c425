import math

import pytest
from scipy import integrate

from sparse_rd.core import discrete, gaussian, gaussian_family, laplace, uniform
from sparse_rd.hypothesis import MixtureModel, alt_density, null_density

# filled by test_acceptance, printed after the run
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)


def bayes_error_by_quadrature(model):
    """Independent oracle: integral of min((1-omega) f0, omega f1)."""
    sd = math.sqrt(max(model.null_variance, model.alt_variance))
    lo, hi = min(0, model.alt_mean) - 14 * sd, max(0, model.alt_mean) + 14 * sd

    def g(x):
        return min((1 - model.omega) * null_density(model, x), model.omega * alt_density(model, x))

    val, _ = integrate.quad(g, lo, hi, limit=500, epsabs=1e-12, epsrel=1e-10)
    return val


def quadratic_boundaries(model):
    """Closed-form roots of the Gaussian log-likelihood-ratio quadratic."""
    v0, v1, m1 = model.null_variance, model.alt_variance, model.alt_mean
    a = 1 / (2 * v0) - 1 / (2 * v1)
    b = m1 / v1
    c = -m1 * m1 / (2 * v1) - 0.5 * math.log(v1 / v0) + math.log(model.omega / (1 - model.omega))
    if a == 0:
        return [] if b == 0 else [-c / b]
    d = b * b - 4 * a * c
    if d <= 0:
        return []
    r = math.sqrt(d)
    return sorted([(-b - r) / (2 * a), (-b + r) / (2 * a)])


def quadratic_region(model, roots):
    """Acceptance region from the closed-form roots, by the leading coefficient's sign."""
    from sparse_rd.hypothesis import ThresholdSet

    edges = [-math.inf, *roots, math.inf]
    keep = []
    for a, b in zip(edges[:-1], edges[1:]):
        if math.isinf(a) and math.isinf(b):
            mid = 0.0
        elif math.isinf(a) or math.isinf(b):
            mid = b - 1 if math.isinf(a) else a + 1
        else:
            mid = 0.5 * (a + b)
        v0, v1, m1 = model.null_variance, model.alt_variance, model.alt_mean
        llr = (-0.5 * math.log(v1 / v0) - (mid - m1) ** 2 / (2 * v1) + mid * mid / (2 * v0)
               + math.log(model.omega / (1 - model.omega)))
        if llr > 0:
            keep.append((a, b))
    return ThresholdSet(tuple(keep))


def model_grid():
    """Twenty-plus models spanning Gaussian and discrete laws."""
    models = []
    for rho in (0.05, 0.2, 0.35, 0.7):
        for f in (gaussian(0, 1), gaussian_family(0.9), discrete([-1, 1]), discrete([1.0, 2.0, -0.5], [0.2, 0.5, 0.3])):
            models.append(MixtureModel(rho, 0.35, f))
    for omega in (0.1, 0.6):
        models.append(MixtureModel(0.3, omega, gaussian(0.5, 0.75)))
        models.append(MixtureModel(0.3, omega, discrete([-2, 1], [0.3, 0.7])))
    return models


@pytest.fixture(scope="session")
def custom_laws():
    return [uniform(1, 2), laplace(0.5, 1)]
