"""Seeded sampling and empirical moments of centered quadratic forms.

Random streams come from the counter-based Philox generator.  Samples are
produced in fixed-size chunks and chunk ``c`` of a stream draws from its
own substream keyed by ``SeedSequence([seed, domain, c])``, so a stream is
a pure function of ``(seed, domain, n_samples, p)`` no matter how the
chunks are scheduled.
"""
from __future__ import annotations

import math
import re
from dataclasses import dataclass

import numpy as np
from scipy import integrate, special, stats

from .bounds import MomentProfile
from .errors import DimensionError, DomainError, InsufficientMomentsError, TooFewSamplesError
from .linalg import SymmetricMatrix, as_symmetric

CHUNK = 8192
N_BATCHES = 32
DEFAULT_SAMPLES = 200_000
MAX_ORACLE_DIM = 20
T_DF_MARGIN = 0.5

# stream domains keep unrelated uses of one seed apart
DOMAIN_QUADFORM = 1
DOMAIN_OBSERVATIONS = 2
DOMAIN_CHI2 = 3
DOMAIN_REPLICATES = 4

DIST_TAGS = ("gaussian", "rademacher", "student_t", "centered_exponential", "uniform_standardized")


@dataclass(frozen=True)
class ComponentDistribution:
    """Law of a single standardized component (mean 0, variance 1)."""

    tag: str
    df: float | None = None

    def __post_init__(self):
        if self.tag not in DIST_TAGS:
            raise DomainError(f"unknown distribution {self.tag!r}; choose from {DIST_TAGS}")
        if self.tag == "student_t":
            if self.df is None or not self.df > 2:
                raise InsufficientMomentsError("student_t needs df > 2 for a finite variance")
        elif self.df is not None:
            raise DomainError(f"{self.tag} takes no df parameter")

    @classmethod
    def parse(cls, spec: str) -> "ComponentDistribution":
        """Parse ``"gaussian"``, ``"student_t(9)"`` and similar tags."""
        m = re.fullmatch(r"\s*([a-z_]+)\s*(?:\(\s*([0-9.eE+-]+)\s*\))?\s*", spec)
        if not m:
            raise DomainError(f"cannot parse distribution {spec!r}")
        tag, df = m.group(1), m.group(2)
        return cls(tag, float(df) if df is not None else None)

    def __str__(self) -> str:
        return f"student_t({self.df:g})" if self.tag == "student_t" else self.tag

    def require_moment(self, w: float) -> None:
        """Raise unless ``E|X|^w`` is finite (with a safety margin for t)."""
        if self.tag == "student_t" and not self.df > w + T_DF_MARGIN:
            raise InsufficientMomentsError(
                f"student_t({self.df:g}) needs df > {w:g} + {T_DF_MARGIN} for this moment")

    def sample(self, rng: np.random.Generator, size) -> np.ndarray:
        if self.tag == "gaussian":
            return rng.standard_normal(size)
        if self.tag == "rademacher":
            return rng.integers(0, 2, size=size).astype(np.float64) * 2.0 - 1.0
        if self.tag == "student_t":
            return rng.standard_t(self.df, size) / math.sqrt(self.df / (self.df - 2.0))
        if self.tag == "centered_exponential":
            return rng.standard_exponential(size) - 1.0
        return rng.uniform(-math.sqrt(3.0), math.sqrt(3.0), size)

    def pdf(self, x):
        if self.tag == "gaussian":
            return stats.norm.pdf(x)
        if self.tag == "student_t":
            s = math.sqrt(self.df / (self.df - 2.0))
            return stats.t.pdf(x * s, self.df) * s
        if self.tag == "centered_exponential":
            return stats.expon.pdf(x + 1.0)
        if self.tag == "uniform_standardized":
            h = math.sqrt(3.0)
            return np.where(np.abs(x) <= h, 1.0 / (2 * h), 0.0)
        raise DomainError("rademacher has no density")

    def support(self) -> tuple[float, float]:
        if self.tag == "centered_exponential":
            return (-1.0, math.inf)
        if self.tag == "uniform_standardized":
            return (-math.sqrt(3.0), math.sqrt(3.0))
        return (-math.inf, math.inf)


def substream(seed: int, domain: int, index: int) -> np.random.Generator:
    if seed < 0:
        raise DomainError("seeds must be nonnegative 64-bit integers")
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([int(seed), domain, index])))


def sample_components(dist: ComponentDistribution, n_rows: int, p: int, seed: int,
                      domain: int = DOMAIN_QUADFORM) -> np.ndarray:
    """``n_rows x p`` matrix of iid standardized components, chunk-seeded."""
    out = np.empty((n_rows, p))
    for c, start in enumerate(range(0, n_rows, CHUNK)):
        stop = min(start + CHUNK, n_rows)
        out[start:stop] = dist.sample(substream(seed, domain, c), (stop - start, p))
    return out


# ---------------------------------------------------------------------------
# moment constants
# ---------------------------------------------------------------------------

def _expectation(dist: ComponentDistribution, fn) -> float:
    """``E fn(X)`` by adaptive quadrature, split where ``|x^2 - 1|`` has kinks."""
    lo, hi = dist.support()
    cuts = [lo] + [c for c in (-1.0, 0.0, 1.0) if lo < c < hi] + [hi]
    total = 0.0
    for a, b in zip(cuts[:-1], cuts[1:]):
        val, _ = integrate.quad(lambda x: fn(x) * dist.pdf(x), a, b,
                                epsabs=0.0, epsrel=1e-10, limit=200)
        total += val
    return total


def abs_moment(dist: ComponentDistribution, w: float) -> float:
    """``E|X|^w`` for the standardized component."""
    if w < 0:
        raise DomainError("moment order must be nonnegative")
    tag = dist.tag
    if tag == "gaussian":
        return 2.0 ** (w / 2) * math.exp(special.gammaln((w + 1) / 2)) / math.sqrt(math.pi)
    if tag == "rademacher":
        return 1.0
    if tag == "uniform_standardized":
        return 3.0 ** (w / 2) / (w + 1)
    if tag == "student_t":
        dist.require_moment(w)
        df = dist.df
        log_raw = (w / 2 * math.log(df) + special.gammaln((w + 1) / 2)
                   + special.gammaln((df - w) / 2) - 0.5 * math.log(math.pi)
                   - special.gammaln(df / 2))
        return math.exp(log_raw - w / 2 * math.log(df / (df - 2)))
    # centered exponential: e^{-1} [Gamma(w+1) + int_0^1 u^w e^u du]
    inner, _ = integrate.quad(lambda u: u ** w * math.exp(u), 0.0, 1.0, epsabs=0.0, epsrel=1e-12)
    return math.exp(-1.0) * (math.gamma(w + 1) + inner)


def nu_moment(dist: ComponentDistribution, q: float) -> float:
    """``nu_q = ||X^2 - 1||_q``."""
    if dist.tag == "rademacher":
        return 0.0
    dist.require_moment(2 * q)
    m = _expectation(dist, lambda x: abs(x * x - 1.0) ** q)
    return m ** (1.0 / q)


def analytic_profile(dist: ComponentDistribution, q: float) -> MomentProfile:
    """Moment constants ``kappa_2, kappa_4, kappa_2q, nu_q`` of ``dist``."""
    if not q > 2:
        raise DomainError(f"q must exceed 2, got {q}")
    dist.require_moment(2 * q)
    k = {w: abs_moment(dist, w) ** (1.0 / w) for w in (2.0, 4.0, 2.0 * q)}
    return MomentProfile(q=q, kappa2=k[2.0], kappa4=k[4.0], kappa2q=k[2.0 * q],
                         nu_q=nu_moment(dist, q), source=f"analytic:{dist}")


# ---------------------------------------------------------------------------
# quadratic form sampling
# ---------------------------------------------------------------------------

def quadform_deviations(a: SymmetricMatrix, x: np.ndarray) -> np.ndarray:
    """``x_i' A x_i - tr(A)`` for each row of ``x``.

    Evaluated as ``sum_j a_jj (x_j^2 - 1) + sum_{j!=k} a_jk x_j x_k`` so the
    diagonal part is exactly zero when ``x_j^2 == 1``.
    """
    diag = a.values.diagonal()
    off = a.off_diagonal()
    return (x * x - 1.0) @ diag + np.einsum("ij,ij->i", x @ off, x)


def iter_quadform_deviations(a, dist: ComponentDistribution, n_samples: int, seed: int):
    """Yield the deviation stream chunk by chunk."""
    a = as_symmetric(a)
    for c, start in enumerate(range(0, n_samples, CHUNK)):
        stop = min(start + CHUNK, n_samples)
        x = dist.sample(substream(seed, DOMAIN_QUADFORM, c), (stop - start, a.p))
        yield quadform_deviations(a, x)


def sample_quadform_deviations(a, dist: ComponentDistribution, n_samples: int, seed: int) -> np.ndarray:
    if n_samples < 0:
        raise DomainError("n_samples must be nonnegative")
    chunks = list(iter_quadform_deviations(a, dist, n_samples, seed))
    return np.concatenate(chunks) if chunks else np.empty(0)


@dataclass(frozen=True)
class EmpiricalMoment:
    estimate: float
    std_error: float
    n_samples: int
    seed: int
    q: float

    def to_json_dict(self) -> dict:
        return {"estimate": self.estimate, "std_error": self.std_error,
                "n_samples": self.n_samples, "seed": self.seed, "q": self.q}


def moment_from_values(values: np.ndarray, q: float, seed: int = 0) -> EmpiricalMoment:
    """Mean of ``|v|^q`` with a 32-batch-means standard error."""
    v = np.abs(np.asarray(values, dtype=np.float64).ravel()) ** q
    n = v.size
    if n < N_BATCHES:
        raise TooFewSamplesError(f"need at least {N_BATCHES} samples, got {n}")
    means = np.array([math.fsum(b) / b.size for b in np.array_split(v, N_BATCHES)])
    centre = math.fsum(means) / N_BATCHES
    spread = math.sqrt(math.fsum((means - centre) ** 2) / (N_BATCHES - 1))
    return EmpiricalMoment(math.fsum(v) / n, spread / math.sqrt(N_BATCHES), n, seed, q)


def empirical_moment(a, dist: ComponentDistribution, q: float,
                     n_samples: int = DEFAULT_SAMPLES, seed: int = 0) -> EmpiricalMoment:
    """Monte Carlo estimate of ``E|x'Ax - tr(A)|^q``."""
    if not q > 0:
        raise DomainError(f"q must be positive, got {q}")
    if n_samples < N_BATCHES:
        raise TooFewSamplesError(f"need at least {N_BATCHES} samples, got {n_samples}")
    return moment_from_values(sample_quadform_deviations(a, dist, n_samples, seed), q, seed)


def exact_moment_rademacher(a, q: float) -> float:
    """Exact ``E|x'Ax - tr(A)|^q`` over all ``2^p`` sign vectors."""
    a = as_symmetric(a)
    p = a.p
    if p > MAX_ORACLE_DIM:
        raise DimensionError(f"enumeration needs p <= {MAX_ORACLE_DIM}, got {p}")
    off = a.off_diagonal()
    codes = np.arange(2 ** p, dtype=np.int64)
    total = []
    for start in range(0, codes.size, 1 << 16):
        block = codes[start:start + (1 << 16)]
        bits = (block[:, None] >> np.arange(p)) & 1
        x = bits.astype(np.float64) * 2.0 - 1.0
        v = np.einsum("ij,ij->i", x @ off, x)
        total.extend(np.abs(v) ** q)
    return math.fsum(total) / codes.size


@dataclass(frozen=True)
class MarkovCheck:
    tail_fraction: float
    moment_over_rq: float
    holds: bool

    def to_json_dict(self) -> dict:
        return {"tail_fraction": self.tail_fraction,
                "moment_over_rq": self.moment_over_rq, "holds": self.holds}


def markov_tail_check(values, q: float, r: float) -> MarkovCheck:
    """Markov's inequality on the empirical measure of ``values``.

    ``#{|v| >= r} / N <= mean(|v|^q) / r^q`` holds for every sample; the
    comparison is carried out on ``sum (|v|/r)^q`` against the integer
    count so that rounding cannot break it.
    """
    if not r > 0:
        raise DomainError(f"r must be positive, got {r}")
    v = np.abs(np.asarray(values, dtype=np.float64).ravel())
    n = v.size
    if n == 0:
        return MarkovCheck(0.0, 0.0, True)
    count = int(np.count_nonzero(v >= r))
    mass = math.fsum((v / r) ** q)
    return MarkovCheck(count / n, mass / n, mass >= count)
