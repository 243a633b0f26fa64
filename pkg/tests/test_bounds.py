import itertools
import json
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from qforma.bounds import (
    MomentProfile,
    bai_silverstein_bound,
    burkholder_diag_bound,
    compare_bounds,
    corollary1_bound,
    rosenthal_sum_bound,
    theorem1_bound,
)
from qforma.errors import DomainError
from qforma.linalg import (
    SymmetricMatrix,
    frobenius_norm,
    gen_block_ones,
    gen_identity,
    gen_ones,
    gen_sparse_member,
    gen_zero,
    is_in_sparse_class,
    random_symmetric,
)

UNIT4 = MomentProfile.unit(4)


def base_terms(a, q):
    """T1 + T2 + T3 with the moment factors stripped, by direct loops."""
    arr = np.asarray(a)
    p = arr.shape[0]
    diag = sum(arr[j, j] ** 2 for j in range(p)) ** (q / 2)
    off = sum(abs(arr[j, k]) ** (2 * q) for j in range(p) for k in range(p) if j != k) ** 0.5
    cols = sum(sum(arr[j, k] ** 2 for j in range(p) if j != k) ** q for k in range(p)) ** 0.5
    return diag + off + cols


sym = st.builds(
    lambda p, seed, scale: random_symmetric(p, np.random.default_rng(seed), scale),
    st.integers(1, 12), st.integers(0, 2**32), st.floats(0.01, 10))


class TestTheorem1:
    def test_identity(self):
        b = theorem1_bound(gen_identity(2), UNIT4)
        assert b.terms == {"T1": 4.0, "T2": 0.0, "T3": 0.0, "T4": 2.0}
        assert b.structural_total == 6.0

    def test_ones(self):
        b = theorem1_bound(gen_ones(2), UNIT4)
        assert list(b.terms.values()) == pytest.approx([4, math.sqrt(2), math.sqrt(2), 16], rel=1e-14)
        assert b.structural_total == pytest.approx(20 + 2 * math.sqrt(2), rel=1e-14)

    def test_zero(self):
        b = theorem1_bound(gen_zero(4), MomentProfile(q=3.5, kappa2=1, kappa4=2, kappa2q=3))
        assert b.structural_total == 0 and all(v == 0 for v in b.terms.values())

    def test_block_example(self):
        # m = k = 4: T1 = 16^2, T2 = sqrt(16*3), T3 = sqrt(16 * 3^4), T4 = 4 * 4^4
        b = theorem1_bound(gen_block_ones(4, 4), UNIT4)
        assert list(b.terms.values()) == pytest.approx([256, math.sqrt(48), 36, 1024], rel=1e-12)

    def test_moment_factors(self):
        prof = MomentProfile(q=3, kappa2=1, kappa4=1.5, kappa2q=2)
        b = theorem1_bound(gen_ones(2), prof)
        # T1 = 2^6 * 2^1.5, T2 = 2^6 * sqrt(2), T3 = 2^3 * sqrt(2), T4 = |s|_4^3 = 8
        assert list(b.terms.values()) == pytest.approx(
            [64 * 2 ** 1.5, 64 * math.sqrt(2), 8 * math.sqrt(2), 8], rel=1e-13)

    def test_q_domain(self):
        with pytest.raises(DomainError):
            MomentProfile(q=2)
        with pytest.raises(DomainError):
            MomentProfile(q=4, kappa2=2, kappa4=1, kappa2q=3)

    def test_cq_scales_value_only(self):
        b = theorem1_bound(gen_identity(2), UNIT4, cq=3.0)
        assert b.structural_total == 6.0 and b.value == 18.0
        with pytest.raises(DomainError):
            theorem1_bound(gen_identity(2), UNIT4, cq=0)

    def test_jacobi_path_agrees(self):
        a = random_symmetric(9, np.random.default_rng(4))
        x = theorem1_bound(a, UNIT4).structural_total
        y = theorem1_bound(a, UNIT4, method="jacobi").structural_total
        assert x == pytest.approx(y, rel=1e-10)

    def test_log_scale_switch(self):
        a = gen_ones(2)
        small = theorem1_bound(a, UNIT4)
        huge = theorem1_bound(a.scaled(1e80), UNIT4)
        assert huge.log_scale and not small.log_scale
        # every term is q-homogeneous: log T(cA) = log T(A) + q log c
        for name in small.terms:
            assert huge.terms[name] == pytest.approx(math.log(small.terms[name]) + 4 * math.log(1e80), rel=1e-13)
        assert huge.structural_total == pytest.approx(math.log(small.structural_total) + 320 * math.log(10), rel=1e-13)
        d = huge.to_json_dict()
        assert d["log_scale"] is True

    def test_log_scale_zero_terms_serialize(self):
        a = SymmetricMatrix(np.diag([1e100, 1e100]))
        b = theorem1_bound(a, UNIT4)
        assert b.log_scale
        d = b.to_json_dict()
        assert d["terms"]["T2"] is None
        json.dumps(d, allow_nan=False)


class TestBaiSilverstein:
    def test_identity(self):
        b = bai_silverstein_bound(gen_identity(2), UNIT4)
        assert b.terms == {"S1": 4.0, "S2": 2.0} and b.structural_total == 6.0

    def test_ones(self):
        b = bai_silverstein_bound(gen_ones(2), UNIT4)
        assert b.terms == {"S1": 16.0, "S2": 16.0} and b.structural_total == 32.0

    def test_zero(self):
        assert bai_silverstein_bound(gen_zero(3), UNIT4).structural_total == 0

    def test_block_example(self):
        assert bai_silverstein_bound(gen_block_ones(4, 4), UNIT4).structural_total == pytest.approx(5120)


class TestCompare:
    def test_identity_ratio_one(self):
        assert compare_bounds(gen_identity(2), UNIT4).ratio == 1.0

    def test_zero_ratio_convention(self):
        assert compare_bounds(gen_zero(5), UNIT4).ratio == 1.0

    def test_block_report(self):
        c = compare_bounds(gen_block_ones(4, 4), UNIT4)
        assert c.ratio == pytest.approx((1316 + math.sqrt(48)) / 5120, rel=1e-12)
        assert set(c.to_json_dict()) == {"theorem1", "bai_silverstein", "ratio"}

    def test_json_keys(self):
        d = theorem1_bound(gen_identity(3), UNIT4).to_json_dict()
        assert list(d) == ["method", "terms", "structural_total", "cq", "log_scale"]
        assert d["method"] == "theorem1"


class TestCorollary:
    def test_scaling_form(self):
        c = corollary1_bound(100, 4, 0.5, 10, 1)
        assert c.scaling.terms == {"dense": 10000.0, "sparse": 1000.0}
        assert c.scaling.structural_total == 11000.0

    def test_unit_scale(self):
        assert corollary1_bound(1, 4, 0.5, 1, 1).scaling.structural_total == 2.0

    def test_tracked_t4(self):
        assert corollary1_bound(16, 4, 0.5, 1, 1).tracked.terms["T4"] == pytest.approx(16.0)

    def test_tracked_c0_powers(self):
        t = corollary1_bound(4, 4, 0.5, 2, 2).tracked.terms
        assert t["T1"] == pytest.approx(2 ** 4 * 4 ** 2)
        assert t["T2"] == pytest.approx(2 ** 3.75 * 2 * math.sqrt(2))
        assert t["T3"] == pytest.approx(2 ** 3 * 2 * 2 ** 2)
        assert t["T4"] == pytest.approx(2 ** 4 * 4)

    def test_domain(self):
        with pytest.raises(DomainError):
            corollary1_bound(10, 2, 0.5, 1, 1)
        with pytest.raises(DomainError):
            corollary1_bound(10, 4, 1.0, 1, 1)
        with pytest.raises(DomainError):
            corollary1_bound(10, 4, 0.5, 0, 1)


class TestScalarBounds:
    def test_rosenthal_examples(self):
        assert rosenthal_sum_bound(4, 4, 3, 1) == 3328
        assert rosenthal_sum_bound(0, 4, 3, 1) == 0
        assert rosenthal_sum_bound(1, 4, 1, 1) == 272
        with pytest.raises(DomainError):
            rosenthal_sum_bound(2, 4, -1, 1)

    @pytest.mark.parametrize("n", [1, 2, 5, 10, 14])
    @pytest.mark.parametrize("q", [3, 4, 6.5])
    def test_rosenthal_dominates_exact_rademacher_sum(self, n, q):
        # exact E|S_n|^q by enumerating all sign patterns
        exact = np.mean([abs(sum(s)) ** q for s in itertools.product((-1, 1), repeat=n)])
        assert exact <= rosenthal_sum_bound(n, q, 1.0, 1.0)

    def test_burkholder_examples(self):
        prof = MomentProfile(q=4, nu_q=1.0)
        assert burkholder_diag_bound([1, 1], prof) == 36
        assert burkholder_diag_bound([], prof) == 0
        assert burkholder_diag_bound([3, -2], MomentProfile.unit(4)) == 0


@settings(max_examples=150, deadline=None)
@given(sym, st.sampled_from([2.5, 3.0, 4.0, 7.0]))
def test_frobenius_domination(a, q):
    b = theorem1_bound(a, MomentProfile.unit(q))
    lhs = b.terms["T1"] + b.terms["T2"] + b.terms["T3"]
    assert lhs == pytest.approx(base_terms(a, q), rel=1e-9)
    assert lhs <= 2 * frobenius_norm(a) ** q


@settings(max_examples=60, deadline=None)
@given(sym, st.floats(-5, 5).filter(lambda c: abs(c) > 1e-3), st.sampled_from([2.5, 4.0, 7.0]))
def test_scale_equivariance(a, c, q):
    prof = MomentProfile(q=q, kappa2=1.0, kappa4=1.2, kappa2q=1.7)
    for fn in (theorem1_bound, bai_silverstein_bound):
        base = fn(a, prof).structural_total
        assert fn(a.scaled(c), prof).structural_total == pytest.approx(abs(c) ** q * base, rel=1e-9)


@settings(max_examples=60, deadline=None)
@given(sym, st.integers(0, 2**32))
def test_permutation_invariance(a, seed):
    perm = np.random.default_rng(seed).permutation(a.p)
    for fn in (theorem1_bound, bai_silverstein_bound):
        assert fn(a.permuted(perm), UNIT4).structural_total == pytest.approx(
            fn(a, UNIT4).structural_total, rel=1e-10)


@pytest.mark.parametrize("q", [2.5, 4.0, 6.0])
def test_identity_family_ratio_bounded(q):
    prof = MomentProfile.unit(q)
    for p in (2, 4, 16, 64, 256):
        assert 0.5 <= compare_bounds(gen_identity(p), prof).ratio <= 2.0


def test_block_family_ratio_collapses():
    ratios = [compare_bounds(gen_block_ones(k, k), UNIT4).ratio for k in (4, 8, 16, 32)]
    assert all(b < a for a, b in zip(ratios, ratios[1:]))


@pytest.mark.parametrize("p,r,c0,seed", [(10, 0.5, 1.0, 0), (30, 0.0, 2.0, 1), (50, 0.8, 0.7, 2), (64, 0.3, 3.0, 3)])
def test_corollary_tracked_dominates_members(p, r, c0, seed):
    m_p = max(1.0, math.sqrt(p))
    a = gen_sparse_member(p, r, m_p, c0, seed)
    assert is_in_sparse_class(a, r, m_p, c0)
    prof = MomentProfile(q=4, kappa2=1.0, kappa4=1.3, kappa2q=1.8)
    t1 = theorem1_bound(a, prof)
    tracked = corollary1_bound(p, 4, r, m_p, c0, prof).tracked
    for name in t1.terms:
        assert t1.terms[name] <= tracked.terms[name] * (1 + 1e-12)
    assert t1.structural_total <= tracked.structural_total
