"""Does the empirical moment stay within a fixed multiple of the four-term total?

The identity family behaves. The block family with k = m = sqrt(p) does not:
the moment grows like p^3 while the four-term total grows like p^2.5, so the
ratio drifts upward. See the decisions ledger for the analysis.
"""
import math

import pytest

from qforma.bounds import MomentProfile, theorem1_bound
from qforma.linalg import gen_block_ones, gen_identity
from qforma.montecarlo import ComponentDistribution, analytic_profile, empirical_moment

Q = 4.0
GAUSS = ComponentDistribution("gaussian")
DRIFT_FACTOR = 2.0


def moment_ratios(family, grid, n_samples=50_000):
    prof = analytic_profile(GAUSS, Q)
    out = []
    for p in grid:
        a = family(p)
        est = empirical_moment(a, GAUSS, Q, n_samples, seed=p).estimate
        out.append(est / theorem1_bound(a, prof).structural_total)
    return out


def test_identity_family_does_not_drift():
    ratios = moment_ratios(gen_identity, (4, 16, 64))
    assert max(ratios) <= DRIFT_FACTOR * ratios[0]


@pytest.mark.xfail(strict=True, reason="four-term total is not a valid upper bound order for this family")
def test_block_family_does_not_drift():
    ratios = moment_ratios(lambda p: gen_block_ones(math.isqrt(p), math.isqrt(p)), (4, 16, 64))
    assert max(ratios) <= DRIFT_FACTOR * ratios[0]


def test_block_family_lower_bound_outgrows_total():
    # Jensen: E|Q|^4 >= (E Q^2)^2 and for Rademacher E Q^2 = 2 * sum_{j!=k} a_jk^2
    ratios = []
    for k in (4, 8, 16, 32):
        a = gen_block_ones(k, k)
        off_sq = k * k * (k - 1)
        lower = (2.0 * off_sq) ** 2
        ratios.append(lower / theorem1_bound(a, MomentProfile.unit(Q)).structural_total)
    assert all(b > a for a, b in zip(ratios, ratios[1:]))
    assert ratios[-1] > 100
