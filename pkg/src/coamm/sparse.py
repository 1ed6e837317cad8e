"""Sparse rows, the append-only row buffer, and the two sparse-dense products.

Finished sparse matrices are ``scipy.sparse.csr_array`` in canonical form
(sorted indices, no duplicates, no stored zeros).
"""
from __future__ import annotations

from typing import NamedTuple

import numpy as np
import scipy.sparse as sp

from .linalg import DimensionError


class SparseRow(NamedTuple):
    """One sparse row vector: column ``indices`` and matching ``values``."""

    indices: np.ndarray
    values: np.ndarray
    size: int

    @property
    def nnz(self) -> int:
        return len(self.indices)

    def toarray(self) -> np.ndarray:
        out = np.zeros(self.size)
        out[self.indices] = self.values
        return out

    def norm(self) -> float:
        return float(np.sqrt(np.dot(self.values, self.values)))


def as_sparse_row(row, size: int | None = None) -> SparseRow:
    """Coerce a dense 1-D array, a 1 x d scipy sparse row or a SparseRow.

    Explicit zeros are dropped.
    """
    if isinstance(row, SparseRow):
        out = row
    elif sp.issparse(row):
        r = sp.csr_array(row)
        if r.shape[0] != 1:
            raise DimensionError(f"expected a single row, got shape {r.shape}")
        r.sum_duplicates()
        out = SparseRow(r.indices.astype(np.int64), r.data.astype(float), r.shape[1])
    else:
        dense = np.asarray(row, dtype=float)
        if dense.ndim != 1:
            raise DimensionError(f"expected a 1-D row, got shape {dense.shape}")
        idx = np.flatnonzero(dense)
        return _checked(SparseRow(idx, dense[idx], dense.shape[0]), size)
    keep = out.values != 0
    if not keep.all():
        out = SparseRow(out.indices[keep], out.values[keep], out.size)
    return _checked(out, size)


def _checked(row: SparseRow, size: int | None) -> SparseRow:
    if size is not None and row.size != size:
        raise DimensionError(f"row has length {row.size}, expected {size}")
    if not np.all(np.isfinite(row.values)):
        raise ValueError("row contains NaN or Inf")
    return row


class SparseRowBuffer:
    """Append-only buffer of sparse rows with a running nnz count."""

    def __init__(self, cols: int):
        if cols < 1:
            raise ValueError("cols must be >= 1")
        self.cols = cols
        self.clear()

    def clear(self) -> None:
        self._indices: list[np.ndarray] = []
        self._values: list[np.ndarray] = []
        self._nnz = 0

    @property
    def rows(self) -> int:
        return len(self._indices)

    @property
    def nnz(self) -> int:
        return self._nnz

    def __len__(self) -> int:
        return self.rows

    def append_row(self, row) -> None:
        row = as_sparse_row(row, self.cols)
        self._indices.append(row.indices)
        self._values.append(row.values)
        self._nnz += row.nnz

    def _append_trusted(self, row: SparseRow) -> None:
        # hot path for rows already validated by the caller
        self._indices.append(row.indices)
        self._values.append(row.values)
        self._nnz += len(row.indices)

    def to_csr(self) -> sp.csr_array:
        """Rows appended so far as a ``rows x cols`` CSR matrix."""
        n = self.rows
        indptr = np.zeros(n + 1, dtype=np.int64)
        if n:
            np.cumsum([len(i) for i in self._indices], out=indptr[1:])
            indices = np.concatenate(self._indices).astype(np.int64, copy=False)
            data = np.concatenate(self._values).astype(float, copy=False)
        else:
            indices = np.zeros(0, dtype=np.int64)
            data = np.zeros(0)
        m = sp.csr_array((data, indices, indptr), shape=(n, self.cols))
        if not m.has_canonical_format:
            m.sum_duplicates()
        return m


def mul_dense(a, g) -> np.ndarray:
    """``a @ g`` for sparse ``a`` (p x q) and dense ``g`` (q x m)."""
    g = np.asarray(g, dtype=float)
    if a.shape[1] != g.shape[0]:
        raise DimensionError(f"cannot multiply {a.shape} by {g.shape}")
    return np.asarray(a @ g)


def mul_transpose_dense(a, g) -> np.ndarray:
    """``a.T @ g`` for sparse ``a`` (p x q) and dense ``g`` (p x m)."""
    g = np.asarray(g, dtype=float)
    if a.shape[0] != g.shape[0]:
        raise DimensionError(f"cannot multiply transpose of {a.shape} by {g.shape}")
    return np.asarray(a.T @ g)


def frobenius(a) -> float:
    """Frobenius norm of a sparse or dense matrix."""
    if sp.issparse(a):
        return float(np.sqrt(np.sum(a.data**2)))
    return float(np.linalg.norm(a))
