"""Readers and writers for matrix and data files.

Dense matrix CSV::

    p
    a11,a12,...,a1p
    ...

Sparse triplet text (1-based, upper triangle only, mirrored on load)::

    p nnz
    i j value
    ...

Data CSV (observations in rows)::

    n p
    x11,...,x1p
    ...

All writers emit 17 significant digits so values round-trip exactly.
"""
from __future__ import annotations

import io
from pathlib import Path

import numpy as np

from .errors import MatrixFormatError, QformaError
from .linalg import SymmetricMatrix


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def _lines(text: str) -> list[str]:
    return [ln.strip() for ln in text.splitlines() if ln.strip() and not ln.lstrip().startswith("#")]


def _int(token: str, what: str) -> int:
    try:
        return int(token)
    except ValueError:
        raise MatrixFormatError(f"{what} must be an integer, got {token!r}") from None


def _float(token: str) -> float:
    try:
        return float(token)
    except ValueError:
        raise MatrixFormatError(f"not a number: {token!r}") from None


def parse_dense(text: str) -> SymmetricMatrix:
    lines = _lines(text)
    if not lines:
        raise MatrixFormatError("empty matrix file")
    p = _int(lines[0], "dimension")
    if p < 1:
        raise MatrixFormatError(f"dimension must be positive, got {p}")
    rows = lines[1:]
    if len(rows) != p:
        raise MatrixFormatError(f"expected {p} rows, found {len(rows)}")
    data = np.empty((p, p))
    for i, row in enumerate(rows):
        cells = row.split(",")
        if len(cells) != p:
            raise MatrixFormatError(f"row {i + 1} has {len(cells)} entries, expected {p}")
        data[i] = [_float(c) for c in cells]
    return _build(data)


def parse_triplets(text: str) -> SymmetricMatrix:
    lines = _lines(text)
    if not lines:
        raise MatrixFormatError("empty matrix file")
    head = lines[0].split()
    if len(head) != 2:
        raise MatrixFormatError("triplet header must be 'p nnz'")
    p, nnz = _int(head[0], "dimension"), _int(head[1], "nnz")
    if p < 1 or nnz < 0:
        raise MatrixFormatError("dimension must be positive and nnz non-negative")
    body = lines[1:]
    if len(body) != nnz:
        raise MatrixFormatError(f"header announces {nnz} entries, found {len(body)}")
    data = np.zeros((p, p))
    for ln in body:
        parts = ln.split()
        if len(parts) != 3:
            raise MatrixFormatError(f"bad triplet line {ln!r}")
        i, j, v = _int(parts[0], "row"), _int(parts[1], "column"), _float(parts[2])
        if not (1 <= i <= p and 1 <= j <= p):
            raise MatrixFormatError(f"index ({i}, {j}) out of range for p = {p}")
        if i > j:
            raise MatrixFormatError(f"entry ({i}, {j}) lies below the diagonal")
        data[i - 1, j - 1] = v
        data[j - 1, i - 1] = v
    return _build(data)


def _build(data: np.ndarray) -> SymmetricMatrix:
    try:
        return SymmetricMatrix(data)
    except QformaError as exc:
        raise MatrixFormatError(str(exc)) from exc


def parse_matrix(text: str) -> SymmetricMatrix:
    """Parse either format; a two-token header selects the triplet reader."""
    lines = _lines(text)
    if lines and len(lines[0].split()) == 2:
        return parse_triplets(text)
    return parse_dense(text)


def read_matrix(path) -> SymmetricMatrix:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise MatrixFormatError(f"cannot read {path}: {exc}") from exc
    return parse_matrix(text)


def format_dense(a: SymmetricMatrix) -> str:
    arr = a.values
    out = io.StringIO()
    out.write(f"{arr.shape[0]}\n")
    for row in arr:
        out.write(",".join(_fmt(x) for x in row) + "\n")
    return out.getvalue()


def format_triplets(a: SymmetricMatrix) -> str:
    arr = a.values
    p = arr.shape[0]
    iu, ju = np.nonzero(np.triu(arr))
    out = io.StringIO()
    out.write(f"{p} {iu.size}\n")
    for i, j in zip(iu, ju):
        out.write(f"{i + 1} {j + 1} {_fmt(arr[i, j])}\n")
    return out.getvalue()


def write_matrix(a: SymmetricMatrix, path, *, sparse: bool = False) -> None:
    text = format_triplets(a) if sparse else format_dense(a)
    Path(path).write_text(text, encoding="utf-8")


def parse_data(text: str) -> np.ndarray:
    lines = _lines(text)
    if not lines:
        raise MatrixFormatError("empty data file")
    head = lines[0].split()
    if len(head) != 2:
        raise MatrixFormatError("data header must be 'n p'")
    n, p = _int(head[0], "n"), _int(head[1], "p")
    if n < 1 or p < 1:
        raise MatrixFormatError("n and p must be positive")
    rows = lines[1:]
    if len(rows) != n:
        raise MatrixFormatError(f"expected {n} observations, found {len(rows)}")
    data = np.empty((n, p))
    for i, row in enumerate(rows):
        cells = row.split(",")
        if len(cells) != p:
            raise MatrixFormatError(f"observation {i + 1} has {len(cells)} values, expected {p}")
        data[i] = [_float(c) for c in cells]
    if not np.all(np.isfinite(data)):
        raise MatrixFormatError("data must be finite")
    return data


def read_data(path) -> np.ndarray:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise MatrixFormatError(f"cannot read {path}: {exc}") from exc
    return parse_data(text)


def format_data(x: np.ndarray) -> str:
    x = np.atleast_2d(np.asarray(x, dtype=np.float64))
    out = io.StringIO()
    out.write(f"{x.shape[0]} {x.shape[1]}\n")
    for row in x:
        out.write(",".join(_fmt(v) for v in row) + "\n")
    return out.getvalue()
