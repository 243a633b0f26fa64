"""Quasi-likelihood-ratio tests for the structure of a precision matrix.

Two simple-vs-simple problems are supported:

* block structure, ``H0: Omega = A`` (``m/2`` blocks of size ``2k``)
  against ``H1: Omega = B`` (``m`` blocks of size ``k``);
* sparsity detection, ``H0: Omega = I`` against a sparse ``B``.

The statistic is ``L*_n = sum_i x_i'(A - B) x_i``.  Critical values come
either from Monte Carlo percentiles of its Gaussian null law (a weighted
sum of chi-square variables) or from conservative regions built from a
moment bound and Markov's inequality, which hold for non-Gaussian data.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .bounds import MomentProfile, theorem1_bound
from .errors import DimensionError, DomainError
from .linalg import (
    SymmetricMatrix,
    as_symmetric,
    block_diagonal,
    eigh,
    gen_identity,
    gen_sparse_member,
    inverse_sqrt,
    is_in_sparse_class,
    log_det,
)
from .montecarlo import (
    DOMAIN_CHI2,
    DOMAIN_OBSERVATIONS,
    DOMAIN_REPLICATES,
    CHUNK,
    ComponentDistribution,
    analytic_profile,
    moment_from_values,
    sample_components,
    substream,
)

METHODS = ("gaussian_mc_percentile", "conservative_theorem1", "conservative_corollary1")
DEFAULT_DRAWS = 200_000
GAUSSIAN = ComponentDistribution("gaussian")


def _check_alpha(alpha: float) -> None:
    if not 0.0 < alpha < 1.0:
        raise DomainError(f"alpha must lie in (0, 1), got {alpha}")


def _offblock_max(a: np.ndarray, size: int) -> float:
    p = a.shape[0]
    mask = np.ones((p, p), dtype=bool)
    for s in range(0, p, size):
        mask[s:s + size, s:s + size] = False
    return float(np.max(np.abs(a[mask]))) if mask.any() else 0.0


@dataclass(frozen=True)
class HypothesisPair:
    """Null and alternative precision matrices with their structure tag."""

    null: SymmetricMatrix
    alt: SymmetricMatrix
    structure: str
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.null.p != self.alt.p:
            raise DimensionError("null and alternative have different dimensions")
        log_det(self.null)
        if self.structure == "block_diagonal":
            m, k = self.params["m"], self.params["k"]
            if m % 2:
                raise DomainError(f"block structure needs an even number of blocks, got m = {m}")
            if m * k != self.null.p:
                raise DimensionError(f"m k = {m * k} does not match p = {self.null.p}")
            if _offblock_max(self.null.values, 2 * k) > 0:
                raise DomainError("null matrix is not block diagonal with 2k x 2k blocks")
            if _offblock_max(self.alt.values, k) > 0:
                raise DomainError("alternative matrix is not block diagonal with k x k blocks")
        elif self.structure == "sparse":
            if not np.array_equal(self.null.values, np.eye(self.null.p)):
                raise DomainError("sparse detection tests against the identity")
        elif self.structure != "general":
            raise DomainError(f"unknown structure {self.structure!r}")

    @classmethod
    def general(cls, null, alt) -> "HypothesisPair":
        """Arbitrary positive definite pair with no structural constraint."""
        return cls(as_symmetric(null), as_symmetric(alt), "general")

    @property
    def p(self) -> int:
        return self.null.p

    @classmethod
    def block(cls, m: int, k: int, null_blocks=None, alt_blocks=None) -> "HypothesisPair":
        """Block pair; defaults to ``A_i = 1 + I`` (size ``2k``) and ``B = I``."""
        if m < 2 or m % 2:
            raise DomainError(f"block structure needs an even number of blocks, got m = {m}")
        if null_blocks is None:
            null_blocks = [np.ones((2 * k, 2 * k)) + np.eye(2 * k)] * (m // 2)
        if alt_blocks is None:
            alt_blocks = [np.eye(k)] * m
        return cls(block_diagonal(null_blocks), block_diagonal(alt_blocks),
                   "block_diagonal", {"m": m, "k": k})

    @classmethod
    def sparse(cls, alt, r: float, m_p: float, c0: float) -> "HypothesisPair":
        """Identity null against a precision matrix ``B`` with ``I - B`` in the sparse class."""
        alt = as_symmetric(alt)
        g = gen_identity(alt.p) - alt
        check = is_in_sparse_class(g, r, m_p, c0)
        if not check:
            raise DomainError(f"I - B is outside the sparse class: {check}")
        return cls(gen_identity(alt.p), alt, "sparse", {"r": r, "m_p": m_p, "c0": c0})


def sparse_alternative(p: int, r: float, m_p: float, seed: int, strength: float = 0.5) -> HypothesisPair:
    """Sparse pair whose alternative is ``I`` plus a scaled sparse off-diagonal pattern.

    The off-diagonal part is taken from :func:`gen_sparse_member` and, when
    needed, shrunk to spectral radius just below ``strength < 1``.  Shrinking
    never raises a column mass, so ``B`` is positive definite and
    ``G = I - B`` is a class member with ``C0 = strength``.
    """
    if not 0 < strength < 1:
        raise DomainError("strength must lie in (0, 1)")
    s = gen_sparse_member(p, r, m_p, 1.0, seed).off_diagonal()
    rho = float(np.max(np.abs(np.linalg.eigvalsh(s)))) if p > 1 else 0.0
    limit = strength * (1.0 - 1e-9)
    if rho > limit:
        s *= limit / rho
    return HypothesisPair.sparse(SymmetricMatrix(np.eye(p) + s), r, m_p, strength)


@dataclass(frozen=True)
class TestOutcome:
    l_n: float
    l_star: float
    critical_value: float
    alpha: float
    reject: bool
    method: str

    __test__ = False  # keep pytest from collecting this class

    def to_json_dict(self) -> dict:
        return {"l_n": self.l_n, "l_star": self.l_star, "critical_value": self.critical_value,
                "alpha": self.alpha, "reject": self.reject, "method": self.method}


def g_matrix(a, b) -> SymmetricMatrix:
    """``G = A^{-1/2} (A - B) A^{-1/2}``."""
    a, b = as_symmetric(a), as_symmetric(b)
    if a.p != b.p:
        raise DimensionError("A and B have different dimensions")
    r = inverse_sqrt(a).values
    return SymmetricMatrix(r @ (a.values - b.values) @ r)


def lrt_statistic(data, a, b) -> tuple[float, float]:
    """Return ``(L_n, L*_n)`` for observations in the rows of ``data``."""
    a, b = as_symmetric(a), as_symmetric(b)
    x = np.atleast_2d(np.asarray(data, dtype=np.float64))
    n, p = x.shape
    if p != a.p or a.p != b.p:
        raise DimensionError(f"data has {p} columns but the matrices are {a.p} x {a.p}")
    if n < 1:
        raise DimensionError("need at least one observation")
    ld = log_det(b) - log_det(a)
    l_star = math.fsum(np.einsum("ij,ij->i", x @ (a.values - b.values), x))
    return ld + l_star / n, l_star


def _percentile(draws: np.ndarray, alpha: float) -> float:
    n = draws.size
    idx = math.ceil(round((1.0 - alpha) * n, 9))
    idx = min(max(idx, 1), n)
    return float(np.partition(draws, idx - 1)[idx - 1])


def weighted_chi2_draws(weights, dof: int, n_draws: int, seed: int) -> np.ndarray:
    """Draws of ``sum_j d_j chi2_j(dof)`` with independent chi-square terms."""
    d = np.asarray(weights, dtype=np.float64)
    d = d[d != 0]
    out = np.zeros(n_draws)
    if d.size == 0:
        return out
    for c, start in enumerate(range(0, n_draws, CHUNK)):
        stop = min(start + CHUNK, n_draws)
        rng = substream(seed, DOMAIN_CHI2, c)
        chi = rng.gamma(dof / 2.0, 2.0, size=(stop - start, d.size))
        acc = np.zeros(stop - start)
        for j in range(d.size):
            acc += d[j] * chi[:, j]
        out[start:stop] = acc
    return out


def gaussian_null_percentile(g, n: int, alpha: float, n_draws: int = DEFAULT_DRAWS, seed: int = 0) -> float:
    """Monte Carlo ``(1 - alpha)`` quantile of ``L*_n`` under a Gaussian null.

    The null law is ``sum_j d_j chi2_j(n)`` with ``d_j`` the eigenvalues of
    ``G``.  The estimator is the order statistic of rank
    ``ceil((1 - alpha) n_draws)``.
    """
    _check_alpha(alpha)
    if n < 1 or n_draws < 1:
        raise DomainError("n and n_draws must be positive")
    d, _ = eigh(as_symmetric(g))
    top = float(np.max(np.abs(d)))
    if top == 0.0:
        return 0.0
    # eigenvalues at rounding level are zero weights
    d = np.where(np.abs(d) <= 1e-12 * top, 0.0, d)
    return _percentile(weighted_chi2_draws(d, n, n_draws, seed), alpha)


@dataclass(frozen=True)
class ConservativeRegion:
    """Critical value ``centre + radius`` for ``L*_n``."""

    critical_value: float
    centre: float
    radius: float
    degenerate: bool = False


def conservative_threshold(n: int, trace_g: float, u_p: float, q: float, alpha: float,
                           cq: float = 1.0) -> ConservativeRegion:
    """``n tr(G) + n^(1/2) (cq U_p / alpha)^(1/q)``."""
    _check_alpha(alpha)
    if not q > 2:
        raise DomainError(f"q must exceed 2, got {q}")
    if not (cq > 0 and u_p >= 0):
        raise DomainError("cq must be positive and U_p nonnegative")
    centre = n * trace_g
    if u_p == 0:
        return ConservativeRegion(centre, centre, 0.0, True)
    radius = math.sqrt(n) * (cq * u_p / alpha) ** (1.0 / q)
    return ConservativeRegion(centre + radius, centre, radius)


def conservative_region_theorem1(g, n: int, q: float, prof: MomentProfile, alpha: float,
                                 cq: float = 1.0) -> ConservativeRegion:
    """Conservative region with ``U_p`` the four-term structural total for ``G``."""
    g = as_symmetric(g)
    bound = theorem1_bound(g, prof)
    if bound.log_scale:
        u_p = math.exp(bound.structural_total) if bound.structural_total < 709 else math.inf
    else:
        u_p = bound.structural_total
    return conservative_threshold(n, g.trace(), u_p, q, alpha, cq)


def sparse_radius(n: int, p: int, q: float, m_p: float, alpha: float, cq: float = 1.0) -> float:
    return math.sqrt(n) * (math.sqrt(p) + p ** (1.0 / (2 * q)) * math.sqrt(m_p)) * (cq / alpha) ** (1.0 / q)


def baseline_sparse_radius(n: int, p: int, q: float, m_p: float, alpha: float, cq: float = 1.0) -> float:
    """Radius of the region derived from the two-term baseline bound."""
    return math.sqrt(n * p * m_p) * (cq / alpha) ** (1.0 / q)


def conservative_region_sparse(g, n: int, p: int, q: float, m_p: float, alpha: float,
                               cq: float = 1.0) -> ConservativeRegion:
    """``n tr(G) + n^(1/2) (p^(1/2) + p^(1/(2q)) M_p^(1/2)) (cq / alpha)^(1/q)``.

    ``g`` may be a matrix or a precomputed trace.
    """
    _check_alpha(alpha)
    if not q > 2 or m_p < 0 or p < 1 or not cq > 0:
        raise DomainError("need q > 2, M_p >= 0, p >= 1 and cq > 0")
    trace_g = float(g) if np.isscalar(g) else as_symmetric(g).trace()
    centre = n * trace_g
    radius = sparse_radius(n, p, q, m_p, alpha, cq)
    return ConservativeRegion(centre + radius, centre, radius)


def baseline_region_sparse(g, n: int, p: int, q: float, m_p: float, alpha: float,
                           cq: float = 1.0) -> ConservativeRegion:
    _check_alpha(alpha)
    trace_g = float(g) if np.isscalar(g) else as_symmetric(g).trace()
    centre = n * trace_g
    radius = baseline_sparse_radius(n, p, q, m_p, alpha, cq)
    return ConservativeRegion(centre + radius, centre, radius)


def simulate_observations(omega, dist: ComponentDistribution, n: int, seed: int) -> np.ndarray:
    """Rows ``x_i = Omega^{-1/2} y_i`` with ``y_i`` iid standardized components."""
    omega = as_symmetric(omega)
    if n < 1:
        raise DomainError("n must be positive")
    r = inverse_sqrt(omega).values
    y = sample_components(dist, n, omega.p, seed, DOMAIN_OBSERVATIONS)
    return y @ r


@dataclass(frozen=True)
class CalibratedConstant:
    """Constant ``cq`` matched to an empirical q-th moment.

    ``moment`` estimates ``E|sum_i (y_i' G y_i - tr G)|^q`` from
    ``n_reps`` replications; ``cq = moment / (n^(q/2) U_p)`` so that the
    theorem-based region reproduces the empirical Markov threshold.
    """

    cq: float
    moment: float
    u_p: float
    n_reps: int
    deviations: np.ndarray = field(repr=False, compare=False)


def replicate_deviations(g, n: int, dist: ComponentDistribution, n_reps: int, seed: int) -> np.ndarray:
    """``sum_i (y_i' G y_i - tr G)`` for ``n_reps`` independent samples of size ``n``."""
    g = as_symmetric(g)
    y = sample_components(dist, n_reps * n, g.p, seed, DOMAIN_REPLICATES)
    per_obs = np.einsum("ij,ij->i", y @ g.values, y) - g.trace()
    return per_obs.reshape(n_reps, n).sum(axis=1)


def calibrate_cq(g, n: int, q: float, prof: MomentProfile, dist: ComponentDistribution,
                 n_reps: int, seed: int) -> CalibratedConstant:
    g = as_symmetric(g)
    dev = replicate_deviations(g, n, dist, n_reps, seed)
    moment = moment_from_values(dev, q, seed).estimate
    u_p = theorem1_bound(g, prof).structural_total
    if u_p == 0:
        raise DomainError("G is zero; nothing to calibrate")
    return CalibratedConstant(moment / (n ** (q / 2) * u_p), moment, u_p, n_reps, dev)


def critical_value(pair: HypothesisPair, n: int, method: str, *, alpha: float = 0.05, q: float = 4.0,
                   dist: ComponentDistribution = GAUSSIAN, prof: MomentProfile | None = None,
                   cq: float = 1.0, n_draws: int = DEFAULT_DRAWS, seed: int = 0,
                   m_p: float | None = None) -> float:
    """Critical value for ``L*_n`` under the chosen method."""
    _check_alpha(alpha)
    g = g_matrix(pair.null, pair.alt)
    if method == "gaussian_mc_percentile":
        return gaussian_null_percentile(g, n, alpha, n_draws, seed)
    if method == "conservative_theorem1":
        prof = prof or analytic_profile(dist, q)
        return conservative_region_theorem1(g, n, q, prof, alpha, cq).critical_value
    if method == "conservative_corollary1":
        if m_p is None:
            m_p = pair.params.get("m_p")
        if m_p is None:
            raise DomainError("conservative_corollary1 needs M_p")
        return conservative_region_sparse(g, n, pair.p, q, m_p, alpha, cq).critical_value
    raise DomainError(f"unknown method {method!r}; choose from {METHODS}")


def run_test(data, pair: HypothesisPair, method: str, **params) -> TestOutcome:
    """Compute ``L_n``, ``L*_n`` and the decision ``L*_n > critical value``.

    Keyword parameters are forwarded to :func:`critical_value`.
    """
    x = np.atleast_2d(np.asarray(data, dtype=np.float64))
    l_n, l_star = lrt_statistic(x, pair.null, pair.alt)
    crit = critical_value(pair, x.shape[0], method, **params)
    alpha = params.get("alpha", 0.05)
    return TestOutcome(l_n, l_star, crit, alpha, bool(l_star > crit), method)


def rejection_rate(pair: HypothesisPair, omega, n: int, crit: float, dist: ComponentDistribution,
                   n_reps: int, seed: int) -> float:
    """Fraction of ``n_reps`` simulated data sets (precision ``omega``) rejected at ``crit``.

    Replicate ``i`` uses the observation stream of seed ``seed + i``.
    """
    rejects = 0
    for i in range(n_reps):
        x = simulate_observations(omega, dist, n, seed + i)
        _, l_star = lrt_statistic(x, pair.null, pair.alt)
        rejects += l_star > crit
    return rejects / n_reps
