"""Closed-form moment bounds for centered quadratic forms ``x'Ax - tr(A)``.

Every bound is reported as a :class:`BoundBreakdown`: the individual
nonnegative terms, their sum (the *structural total*, i.e. the bound with
the unknown constant set to one), and the user-supplied constant ``cq``.
Comparisons between bounds are made on structural totals, where the
constant cancels.

When any intermediate quantity would exceed ``1e300`` the breakdown is
computed in log space instead; ``log_scale`` is then set and ``terms`` and
``structural_total`` hold natural logarithms.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError
from .linalg import as_symmetric, singular_values

LOG_CAP = math.log(1e300)

METHODS = ("theorem1", "bai_silverstein", "corollary1", "rosenthal_sum", "burkholder_diag")


@dataclass(frozen=True)
class MomentProfile:
    """Moment constants of the component law.

    ``kappa_w`` is ``(E|X|^w)^(1/w)`` and ``nu_q`` is ``||X^2 - 1||_q``.
    """

    q: float
    kappa2: float = 1.0
    kappa4: float = 1.0
    kappa2q: float = 1.0
    nu_q: float = 0.0
    source: str = "unit"

    def __post_init__(self):
        _check_q(self.q)
        vals = (self.kappa2, self.kappa4, self.kappa2q, self.nu_q)
        if not all(math.isfinite(v) and v >= 0 for v in vals):
            raise DomainError(f"moment constants must be finite and nonnegative: {vals}")
        slack = 1e-12 * max(1.0, self.kappa2q)
        if self.kappa2 > self.kappa4 + slack or self.kappa4 > self.kappa2q + slack:
            raise DomainError(
                "moment constants violate kappa2 <= kappa4 <= kappa2q: "
                f"{self.kappa2}, {self.kappa4}, {self.kappa2q}")

    @classmethod
    def unit(cls, q: float) -> "MomentProfile":
        """All kappa equal to one (Rademacher-like scaling)."""
        return cls(q=q)


@dataclass(frozen=True)
class BoundBreakdown:
    method: str
    terms: dict
    structural_total: float
    cq: float = 1.0
    log_scale: bool = False

    @property
    def value(self) -> float:
        """``cq * structural_total`` (a log when ``log_scale``)."""
        if self.log_scale:
            return _log(self.cq) + self.structural_total
        return self.cq * self.structural_total

    @property
    def log_total(self) -> float:
        return self.structural_total if self.log_scale else _log(self.structural_total)

    def to_json_dict(self) -> dict:
        return {
            "method": self.method,
            "terms": {k: _json_float(v) for k, v in self.terms.items()},
            "structural_total": _json_float(self.structural_total),
            "cq": self.cq,
            "log_scale": self.log_scale,
        }


def _json_float(x: float):
    return None if math.isinf(x) and x < 0 else float(x)


def _check_q(q: float) -> None:
    if not (isinstance(q, (int, float)) and math.isfinite(q) and q > 2):
        raise DomainError(f"q must be a finite real > 2, got {q!r}")


def _check_cq(cq: float) -> None:
    if not (math.isfinite(cq) and cq > 0):
        raise DomainError(f"cq must be positive and finite, got {cq!r}")


def _log(x: float) -> float:
    return math.log(x) if x > 0 else -math.inf


def _log_pow_sum(x: np.ndarray, w: float) -> float:
    """``log sum |x|^w`` evaluated without overflow; ``-inf`` for an all-zero input."""
    ax = np.abs(np.asarray(x, dtype=np.float64).ravel())
    ax = ax[ax != 0]
    if ax.size == 0:
        return -math.inf
    top = float(ax.max())
    return w * math.log(top) + math.log(math.fsum((ax / top) ** w))


def _pow_sum(x: np.ndarray, w: float) -> float:
    ax = np.abs(np.asarray(x, dtype=np.float64).ravel())
    return math.fsum(ax[ax != 0] ** w)


def _logsumexp(logs) -> float:
    logs = [v for v in logs if v != -math.inf]
    if not logs:
        return -math.inf
    top = max(logs)
    return top + math.log(math.fsum(math.exp(v - top) for v in logs))


def _finish(method, names, logs, linear, intermediates, cq) -> BoundBreakdown:
    _check_cq(cq)
    if max([*logs, *intermediates, -math.inf]) > LOG_CAP:
        terms = dict(zip(names, logs))
        return BoundBreakdown(method, terms, _logsumexp(logs), cq, True)
    vals = [v() for v in linear]
    return BoundBreakdown(method, dict(zip(names, vals)), math.fsum(vals), cq, False)


def theorem1_bound(a, prof: MomentProfile, cq: float = 1.0, *, method: str = "lapack") -> BoundBreakdown:
    """Four-term structural bound on ``E|x'Ax - tr(A)|^q``.

    Terms, with ``q = prof.q``:

    * ``T1 = kappa2q^(2q) (sum_j a_jj^2)^(q/2)``
    * ``T2 = kappa2q^(2q) (sum_{j!=k} |a_jk|^(2q))^(1/2)``
    * ``T3 = (kappa2 kappa2q)^q (sum_k (sum_{j!=k} a_jk^2)^q)^(1/2)``
    * ``T4 = kappa2^q |s|_4^q`` with ``s`` the singular values of ``A``.
    """
    a = as_symmetric(a)
    q = prof.q
    _check_q(q)
    arr = a.values
    diag = arr.diagonal()
    off = a.off_diagonal()
    spec = singular_values(a, method=method, exponents=())
    s = spec.singular_values

    l_diag = _log_pow_sum(diag, 2)
    l_off = _log_pow_sum(off, 2 * q)
    col_logs = [_log_pow_sum(col, 2) for col in off.T]
    l_cols = _logsumexp([q * v for v in col_logs])
    l_s4 = _log_pow_sum(s, 4)
    lk2, lk2q = _log(prof.kappa2), _log(prof.kappa2q)

    logs = [
        2 * q * lk2q + q / 2 * l_diag,
        2 * q * lk2q + 0.5 * l_off,
        q * (lk2 + lk2q) + 0.5 * l_cols,
        q * lk2 + q / 4 * l_s4,
    ]
    logs = [(-math.inf if math.isnan(v) else v) for v in logs]
    intermediates = [l_diag, l_off, l_cols, l_s4, *(q * v for v in col_logs)]

    def t3():
        cols = [_pow_sum(col, 2) for col in off.T]
        return (prof.kappa2 * prof.kappa2q) ** q * math.fsum(c ** q for c in cols) ** 0.5

    linear = [
        lambda: prof.kappa2q ** (2 * q) * _pow_sum(diag, 2) ** (q / 2),
        lambda: prof.kappa2q ** (2 * q) * _pow_sum(off, 2 * q) ** 0.5,
        t3,
        lambda: prof.kappa2 ** q * _pow_sum(s, 4) ** (q / 4),
    ]
    return _finish("theorem1", ["T1", "T2", "T3", "T4"], logs, linear, intermediates, cq)


def bai_silverstein_bound(a, prof: MomentProfile, cq: float = 1.0, *, method: str = "lapack") -> BoundBreakdown:
    """Two-term baseline bound ``kappa4^(2q) |A|_F^q + kappa2q^(2q) |s|_q^q``."""
    a = as_symmetric(a)
    q = prof.q
    _check_q(q)
    s = singular_values(a, method=method, exponents=()).singular_values
    l_fro2 = _log_pow_sum(a.values, 2)
    l_sq = _log_pow_sum(s, q)
    logs = [
        2 * q * _log(prof.kappa4) + q / 2 * l_fro2,
        2 * q * _log(prof.kappa2q) + l_sq,
    ]
    logs = [(-math.inf if math.isnan(v) else v) for v in logs]
    linear = [
        lambda: prof.kappa4 ** (2 * q) * _pow_sum(a.values, 2) ** (q / 2),
        lambda: prof.kappa2q ** (2 * q) * _pow_sum(s, q),
    ]
    return _finish("bai_silverstein", ["S1", "S2"], logs, linear, [l_fro2, l_sq], cq)


@dataclass(frozen=True)
class CorollaryBound:
    """Sparse-class bound in two forms.

    ``scaling`` holds the bare rates ``p^(q/2)`` and ``p^(1/2) M_p^(q/2)``;
    ``tracked`` bounds each of the four theorem terms separately with
    explicit powers of ``C0`` so that it dominates the theorem's structural
    total for every member of the class.
    """

    scaling: BoundBreakdown
    tracked: BoundBreakdown


def corollary1_bound(p: int, q: float, r: float, m_p: float, c0: float,
                     prof: MomentProfile | None = None, cq: float = 1.0) -> CorollaryBound:
    _check_q(q)
    if int(p) != p or p < 1:
        raise DomainError(f"p must be a positive integer, got {p!r}")
    if not 0.0 <= r < 1.0:
        raise DomainError(f"r must lie in [0, 1), got {r}")
    if not (m_p > 0 and c0 > 0):
        raise DomainError("M_p and C0 must be positive")
    prof = prof or MomentProfile.unit(q)
    if prof.q != q:
        raise DomainError(f"profile exponent {prof.q} does not match q = {q}")
    lp, lm, lc = math.log(p), math.log(m_p), math.log(c0)
    lk2, lk2q = _log(prof.kappa2), _log(prof.kappa2q)

    scaling_logs = [q / 2 * lp, 0.5 * lp + q / 2 * lm]
    scaling = _finish(
        "corollary1", ["dense", "sparse"], scaling_logs,
        [lambda: float(p) ** (q / 2), lambda: float(p) ** 0.5 * m_p ** (q / 2)], [], cq)

    tracked_logs = [
        2 * q * lk2q + q * lc + q / 2 * lp,
        2 * q * lk2q + (q - r / 2) * lc + 0.5 * lp + 0.5 * lm,
        q * (lk2 + lk2q) + q * (1 - r / 2) * lc + 0.5 * lp + q / 2 * lm,
        q * lk2 + q * lc + q / 4 * lp,
    ]
    tracked_linear = [
        lambda: prof.kappa2q ** (2 * q) * c0 ** q * float(p) ** (q / 2),
        lambda: prof.kappa2q ** (2 * q) * c0 ** (q - r / 2) * float(p) ** 0.5 * m_p ** 0.5,
        lambda: (prof.kappa2 * prof.kappa2q) ** q * c0 ** (q * (1 - r / 2)) * float(p) ** 0.5 * m_p ** (q / 2),
        lambda: prof.kappa2 ** q * c0 ** q * float(p) ** (q / 4),
    ]
    tracked = _finish("corollary1", ["T1", "T2", "T3", "T4"], tracked_logs, tracked_linear, [], cq)
    return CorollaryBound(scaling, tracked)


def rosenthal_sum_bound(n: int, q: float, mu_q: float, sigma2: float, c: float = 1.0) -> float:
    """``C^q [q^q n mu_q + q^(q/2) (n sigma2)^(q/2)]`` for a sum of ``n`` iid
    mean-zero variables with ``E|X|^q = mu_q`` and ``E X^2 = sigma2``."""
    _check_q(q)
    if n < 0 or int(n) != n:
        raise DomainError(f"n must be a nonnegative integer, got {n!r}")
    if mu_q < 0 or sigma2 < 0 or c < 0:
        raise DomainError("moments and the constant must be nonnegative")
    return c ** q * (q ** q * n * mu_q + q ** (q / 2) * (n * sigma2) ** (q / 2))


def burkholder_diag_bound(diag, prof: MomentProfile) -> float:
    """q-th moment bound ``((q-1) nu_q^2 sum_j a_jj^2)^(q/2)`` for the diagonal part."""
    q = prof.q
    d = np.asarray(diag, dtype=np.float64).ravel()
    return ((q - 1) * prof.nu_q ** 2 * _pow_sum(d, 2)) ** (q / 2)


@dataclass(frozen=True)
class BoundComparison:
    theorem1: BoundBreakdown
    bai_silverstein: BoundBreakdown
    ratio: float = field(default=1.0)

    def to_json_dict(self) -> dict:
        return {
            "theorem1": self.theorem1.to_json_dict(),
            "bai_silverstein": self.bai_silverstein.to_json_dict(),
            "ratio": self.ratio,
        }


def structural_ratio(num: BoundBreakdown, den: BoundBreakdown) -> float:
    """Ratio of structural totals; ``0/0`` is reported as 1."""
    ln, ld = num.log_total, den.log_total
    if ln == -math.inf and ld == -math.inf:
        return 1.0
    if not (num.log_scale or den.log_scale):
        return num.structural_total / den.structural_total
    return math.exp(ln - ld)


def compare_bounds(a, prof: MomentProfile) -> BoundComparison:
    t1 = theorem1_bound(a, prof)
    bs = bai_silverstein_bound(a, prof)
    return BoundComparison(t1, bs, structural_ratio(t1, bs))
