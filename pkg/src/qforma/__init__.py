"""Moment bounds for centered quadratic forms and tests built on them."""
from .bounds import (
    MomentProfile,
    bai_silverstein_bound,
    compare_bounds,
    corollary1_bound,
    theorem1_bound,
)
from .hyptest import HypothesisPair, TestOutcome, g_matrix, lrt_statistic, run_test
from .linalg import SymmetricMatrix
from .montecarlo import (
    ComponentDistribution,
    analytic_profile,
    empirical_moment,
    exact_moment_rademacher,
    markov_tail_check,
)

__version__ = "0.1.0"

__all__ = [
    "ComponentDistribution",
    "HypothesisPair",
    "MomentProfile",
    "SymmetricMatrix",
    "TestOutcome",
    "analytic_profile",
    "bai_silverstein_bound",
    "compare_bounds",
    "corollary1_bound",
    "empirical_moment",
    "exact_moment_rademacher",
    "g_matrix",
    "lrt_statistic",
    "markov_tail_check",
    "run_test",
    "theorem1_bound",
]
