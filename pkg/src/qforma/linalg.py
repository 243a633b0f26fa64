"""Symmetric matrices, their spectra and norms, and structured generators.

Every bound and test in the package consumes a :class:`SymmetricMatrix`.
Construction validates symmetry and finiteness once so that downstream
code can rely on a real spectrum.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    DecompositionError,
    DimensionError,
    DomainError,
    InfeasibleClassError,
    NotPositiveDefiniteError,
    SymmetryError,
)

MAX_DIM = 4096
SYMMETRY_RTOL = 1e-12
JACOBI_TOL = 1e-12
JACOBI_MAX_SWEEPS = 64
RESIDUAL_RTOL = 1e-10


class SymmetricMatrix:
    """Immutable dense real symmetric ``p x p`` matrix."""

    __slots__ = ("_a",)

    def __init__(self, entries, *, max_dim: int = MAX_DIM):
        a = np.array(entries, dtype=np.float64)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise DimensionError(f"expected a square 2-D array, got shape {a.shape}")
        p = a.shape[0]
        if p < 1:
            raise DimensionError("dimension must be at least 1")
        if p > max_dim:
            raise DimensionError(f"dimension {p} exceeds the cap {max_dim}")
        if not np.all(np.isfinite(a)):
            raise DomainError("matrix entries must be finite")
        scale = max(1.0, float(np.max(np.abs(a))))
        asym = float(np.max(np.abs(a - a.T)))
        if asym > SYMMETRY_RTOL * scale:
            raise SymmetryError(f"matrix is not symmetric (max |a_jk - a_kj| = {asym:.3g})")
        # exact for already-symmetric input
        a = (a + a.T) / 2.0
        a.setflags(write=False)
        self._a = a

    @property
    def values(self) -> np.ndarray:
        """Read-only view of the entries."""
        return self._a

    @property
    def p(self) -> int:
        return self._a.shape[0]

    def __array__(self, dtype=None, copy=None):
        if dtype is None:
            return self._a.copy()
        return self._a.astype(dtype)

    def diagonal(self) -> np.ndarray:
        return self._a.diagonal().copy()

    def trace(self) -> float:
        return math.fsum(self._a.diagonal())

    def off_diagonal(self) -> np.ndarray:
        """Copy of the entries with the diagonal zeroed."""
        out = self._a.copy()
        np.fill_diagonal(out, 0.0)
        return out

    def scaled(self, c: float) -> "SymmetricMatrix":
        return SymmetricMatrix(c * self._a)

    def permuted(self, perm) -> "SymmetricMatrix":
        """Simultaneous row/column permutation ``P A P^T``."""
        perm = np.asarray(perm)
        return SymmetricMatrix(self._a[np.ix_(perm, perm)])

    def __add__(self, other: "SymmetricMatrix") -> "SymmetricMatrix":
        return SymmetricMatrix(self._a + _as_array(other))

    def __sub__(self, other: "SymmetricMatrix") -> "SymmetricMatrix":
        return SymmetricMatrix(self._a - _as_array(other))

    def __eq__(self, other) -> bool:
        if not isinstance(other, SymmetricMatrix):
            return NotImplemented
        return self._a.shape == other._a.shape and bool(np.array_equal(self._a, other._a))

    __hash__ = None

    def __repr__(self) -> str:
        return f"SymmetricMatrix(p={self.p})"


def _as_array(a) -> np.ndarray:
    if isinstance(a, SymmetricMatrix):
        return a.values
    return np.asarray(a, dtype=np.float64)


def as_symmetric(a) -> SymmetricMatrix:
    return a if isinstance(a, SymmetricMatrix) else SymmetricMatrix(a)


# ---------------------------------------------------------------------------
# eigendecomposition
# ---------------------------------------------------------------------------

def jacobi_eigh(a, *, tol: float = JACOBI_TOL, max_sweeps: int = JACOBI_MAX_SWEEPS):
    """Cyclic Jacobi eigendecomposition of a symmetric array.

    Returns ``(eigenvalues, eigenvectors)`` with eigenvalues ascending.
    Converges when the off-diagonal Frobenius mass drops below
    ``tol * ||A||_F``; raises :class:`DecompositionError` after
    ``max_sweeps`` sweeps otherwise.
    """
    a = np.array(_as_array(a), dtype=np.float64)
    p = a.shape[0]
    v = np.eye(p)
    scale = float(np.linalg.norm(a))
    if scale == 0.0 or p == 1:
        return a.diagonal().copy(), v

    offmask = ~np.eye(p, dtype=bool)

    def off_mass():
        return float(np.linalg.norm(a[offmask]))

    for _ in range(max_sweeps):
        if off_mass() <= tol * scale:
            break
        for j in range(p - 1):
            for k in range(j + 1, p):
                ajk = a[j, k]
                if ajk == 0.0:
                    continue
                gap = a[k, k] - a[j, j]
                if abs(ajk) < 1e-300 * max(abs(gap), 1.0):
                    # rotation angle underflows; the entry is already negligible
                    a[j, k] = a[k, j] = 0.0
                    continue
                theta = gap / (2.0 * ajk)
                t = 1.0 / (abs(theta) + math.hypot(theta, 1.0))
                if theta < 0.0:
                    t = -t
                c = 1.0 / math.sqrt(t * t + 1.0)
                s = t * c
                cj = a[:, j].copy()
                ck = a[:, k].copy()
                a[:, j] = c * cj - s * ck
                a[:, k] = s * cj + c * ck
                rj = a[j, :].copy()
                rk = a[k, :].copy()
                a[j, :] = c * rj - s * rk
                a[k, :] = s * rj + c * rk
                a[j, k] = a[k, j] = 0.0
                vj = v[:, j].copy()
                vk = v[:, k].copy()
                v[:, j] = c * vj - s * vk
                v[:, k] = s * vj + c * vk
    else:
        if off_mass() > tol * scale:
            raise DecompositionError(f"Jacobi did not converge in {max_sweeps} sweeps")
    w = a.diagonal().copy()
    order = np.argsort(w, kind="stable")
    return w[order], v[:, order]


def eigh(a, method: str = "lapack"):
    """Eigenvalues (ascending) and orthonormal eigenvectors of a symmetric matrix.

    ``method`` is ``"lapack"`` (default) or ``"jacobi"``.  The residual
    ``||A v - lambda v||`` of every pair is checked against
    ``1e-10 * (1 + ||A||_F)``.
    """
    arr = _as_array(a)
    if method == "lapack":
        try:
            w, v = np.linalg.eigh(arr)
        except np.linalg.LinAlgError as exc:
            raise DecompositionError(str(exc)) from exc
    elif method == "jacobi":
        w, v = jacobi_eigh(arr)
    else:
        raise DomainError(f"unknown eigensolver {method!r}")
    resid = np.linalg.norm(arr @ v - v * w, axis=0)
    limit = RESIDUAL_RTOL * (1.0 + float(np.linalg.norm(arr)))
    if resid.size and float(resid.max()) > limit:
        raise DecompositionError(f"eigen residual {resid.max():.3g} exceeds {limit:.3g}")
    return w, v


@dataclass(frozen=True)
class SpectralSummary:
    """Singular values (descending) with cached l^w norms."""

    singular_values: np.ndarray
    norms: dict = field(default_factory=dict)

    def power_sum(self, w: float) -> float:
        """``sum_j s_j^w`` (zero singular values contribute nothing)."""
        s = self.singular_values
        return math.fsum(s[s > 0] ** w)

    def norm(self, w: float) -> float:
        if w in self.norms:
            return self.norms[w]
        s = self.singular_values
        top = float(s[0]) if s.size else 0.0
        if top == 0.0:
            return 0.0
        return top * math.fsum((s[s > 0] / top) ** w) ** (1.0 / w)


def singular_values(a, *, method: str = "lapack", exponents=(2, 4)) -> SpectralSummary:
    """Singular values of a symmetric matrix, i.e. ``|lambda_j(A)|`` sorted descending."""
    w, _ = eigh(as_symmetric(a), method=method)
    s = np.sort(np.abs(w))[::-1].copy()
    s.setflags(write=False)
    summary = SpectralSummary(s)
    for e in exponents:
        summary.norms[float(e)] = summary.norm(float(e))
    return summary


def spectral_radius(a, *, method: str = "lapack") -> float:
    w, _ = eigh(as_symmetric(a), method=method)
    return float(np.max(np.abs(w)))


def frobenius_norm(a) -> float:
    arr = _as_array(a)
    top = float(np.max(np.abs(arr))) if arr.size else 0.0
    if top == 0.0:
        return 0.0
    return top * math.sqrt(math.fsum(((arr / top) ** 2).ravel()))


def inverse_sqrt(omega, eps: float = 1e-10, *, method: str = "lapack") -> SymmetricMatrix:
    """Symmetric inverse square root of a positive definite matrix."""
    omega = as_symmetric(omega)
    w, v = eigh(omega, method=method)
    if float(w[0]) <= eps:
        raise NotPositiveDefiniteError(
            f"smallest eigenvalue {float(w[0]):.3g} is not above {eps:g}")
    r = (v / np.sqrt(w)) @ v.T
    r = (r + r.T) / 2.0
    p = omega.p
    err = float(np.linalg.norm(r @ r @ omega.values - np.eye(p)))
    if err > 1e-8 * p:
        raise DecompositionError(f"inverse square root residual {err:.3g} too large")
    return SymmetricMatrix(r)


def log_det(omega, eps: float = 1e-10, *, method: str = "lapack") -> float:
    """log det of a positive definite matrix via its eigenvalues."""
    w, _ = eigh(as_symmetric(omega), method=method)
    if float(w[0]) <= eps:
        raise NotPositiveDefiniteError(
            f"smallest eigenvalue {float(w[0]):.3g} is not above {eps:g}")
    return math.fsum(np.log(w))


# ---------------------------------------------------------------------------
# generators
# ---------------------------------------------------------------------------

def _check_dim(p: int, max_dim: int = MAX_DIM) -> int:
    if int(p) != p or p < 1:
        raise DimensionError(f"dimension must be a positive integer, got {p!r}")
    if p > max_dim:
        raise DimensionError(f"dimension {p} exceeds the cap {max_dim}")
    return int(p)


def gen_identity(p: int) -> SymmetricMatrix:
    return SymmetricMatrix(np.eye(_check_dim(p)))


def gen_zero(p: int) -> SymmetricMatrix:
    return SymmetricMatrix(np.zeros((_check_dim(p), _check_dim(p))))


def gen_ones(p: int) -> SymmetricMatrix:
    p = _check_dim(p)
    return SymmetricMatrix(np.ones((p, p)))


def gen_block_ones(m: int, k: int) -> SymmetricMatrix:
    """Block-diagonal matrix of ``m`` all-ones ``k x k`` blocks (``p = m k``)."""
    m = _check_dim(m, MAX_DIM)
    k = _check_dim(k, MAX_DIM)
    _check_dim(m * k)
    return SymmetricMatrix(np.kron(np.eye(m), np.ones((k, k))))


def block_diagonal(blocks) -> SymmetricMatrix:
    blocks = [np.atleast_2d(np.asarray(b, dtype=np.float64)) for b in blocks]
    p = _check_dim(sum(b.shape[0] for b in blocks))
    out = np.zeros((p, p))
    i = 0
    for b in blocks:
        n = b.shape[0]
        out[i:i + n, i:i + n] = b
        i += n
    return SymmetricMatrix(out)


def random_symmetric(p: int, rng: np.random.Generator, scale: float = 1.0) -> SymmetricMatrix:
    """Symmetric matrix with iid normal upper-triangle entries."""
    p = _check_dim(p)
    g = rng.standard_normal((p, p)) * scale
    return SymmetricMatrix(np.triu(g) + np.triu(g, 1).T)


# ---------------------------------------------------------------------------
# approximately sparse class
# ---------------------------------------------------------------------------

def _lr_mass(x: np.ndarray, r: float) -> np.ndarray:
    """Elementwise ``|x|^r`` with the counting convention ``|0|^0 = 0``."""
    ax = np.abs(x)
    if r == 0:
        return (ax != 0).astype(np.float64)
    return ax ** r


def column_lr_mass(a, r: float) -> np.ndarray:
    """``sum_j |a_jk|^r`` for every column ``k``."""
    mass = _lr_mass(_as_array(a), r)
    return np.array([math.fsum(col) for col in mass.T])


@dataclass(frozen=True)
class SparseClassCheck:
    """Membership verdict for the strong l^r-ball class, with a witness."""

    member: bool
    spectral_radius: float
    max_column_mass: float
    violating_column: int | None = None
    spectral_excess: float | None = None

    def __bool__(self) -> bool:
        return self.member


def _check_class_params(r: float, m_p: float, c0: float) -> None:
    if not 0.0 <= r < 1.0:
        raise DomainError(f"r must lie in [0, 1), got {r}")
    if not m_p > 0:
        raise DomainError(f"M_p must be positive, got {m_p}")
    if not c0 > 0:
        raise DomainError(f"C0 must be positive, got {c0}")


def is_in_sparse_class(a, r: float, m_p: float, c0: float) -> SparseClassCheck:
    """Check ``rho(A) <= C0`` and ``max_k sum_j |a_jk|^r <= M_p``.

    The witness names the first column over budget and the amount by
    which the spectral radius exceeds ``C0``, when either condition fails.
    """
    _check_class_params(r, m_p, c0)
    a = as_symmetric(a)
    rho = spectral_radius(a)
    mass = column_lr_mass(a, r)
    over = np.flatnonzero(mass > m_p)
    col = int(over[0]) if over.size else None
    excess = rho - c0 if rho > c0 else None
    return SparseClassCheck(
        member=col is None and excess is None,
        spectral_radius=rho,
        max_column_mass=float(mass.max()),
        violating_column=col,
        spectral_excess=excess,
    )


def gen_sparse_member(p: int, r: float, m_p: float, c0: float, seed: int) -> SymmetricMatrix:
    """Seeded member of the strong l^r-ball class.

    Diagonal entries are drawn from ``[0.5, 1]``; off-diagonal entries in
    ``[-1, 1]`` are then proposed column by column and kept only when both
    affected columns stay inside the l^r budget.  A final spectral rescale
    enforces ``rho(A) <= C0`` (shrinking entries never increases the
    l^r mass) and membership is re-checked before returning.
    """
    p = _check_dim(p)
    _check_class_params(r, m_p, c0)
    if m_p < 1.0:
        raise InfeasibleClassError(
            f"M_p = {m_p} cannot hold a diagonal entry of magnitude up to 1 per column")
    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence([int(seed), 0x5A])))
    a = np.zeros((p, p))
    diag = rng.uniform(0.5, 1.0, size=p)
    np.fill_diagonal(a, diag)
    # small margin keeps the final re-check robust to rounding
    budget = m_p * (1.0 - 1e-9) - _lr_mass(diag, r)
    attempts = int(4 * math.ceil(m_p) + 4)
    for k in range(p - 1):
        rows = np.arange(k + 1, p)
        n_try = min(attempts, rows.size)
        cand = rng.permutation(rows)[:n_try]
        vals = rng.uniform(-1.0, 1.0, size=n_try)
        for j, v in zip(cand, vals):
            if v == 0.0:
                continue
            cost = 1.0 if r == 0 else abs(v) ** r
            if budget[k] >= cost and budget[j] >= cost:
                a[j, k] = a[k, j] = v
                budget[k] -= cost
                budget[j] -= cost
    rho = float(np.max(np.abs(np.linalg.eigvalsh(a))))
    if rho > c0:
        a *= c0 * (1.0 - 1e-9) / rho
    out = SymmetricMatrix(a)
    check = is_in_sparse_class(out, r, m_p, c0)
    if not check:
        raise InfeasibleClassError(f"generated matrix failed the membership re-check: {check}")
    return out
