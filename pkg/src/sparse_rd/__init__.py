"""Sampling-rate distortion bounds for sparse support recovery, with numeric checks."""

__version__ = "0.1.0"

from .core import (  # noqa: E402
    DistributionSpec,
    SparsityConfig,
    binary_entropy,
    delta,
    discrete,
    entropy_power,
    gaussian,
    gaussian_family,
    laplace,
    theta,
    uniform,
)
from .bounds import (  # noqa: E402
    corollary_holds,
    general_source_rate,
    lower_bound_rate,
    upper_bound_rate,
)
from .hypothesis import MixtureModel, epsilon, optimal_threshold_set  # noqa: E402

__all__ = [
    "DistributionSpec",
    "SparsityConfig",
    "MixtureModel",
    "binary_entropy",
    "delta",
    "theta",
    "entropy_power",
    "gaussian",
    "discrete",
    "uniform",
    "laplace",
    "gaussian_family",
    "general_source_rate",
    "lower_bound_rate",
    "upper_bound_rate",
    "corollary_holds",
    "epsilon",
    "optimal_threshold_set",
]
