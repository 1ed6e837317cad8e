"""Concatenation baselines: sketch ``Z = [X, Y]`` and read the cross block.

``FDAMM`` runs Frequent Directions on Z. ``SFDAMM`` runs the sparse
co-occurring directions engine on the pair (Z, Z) and splits the resulting
factors column-wise, so ``A^T B`` is the top-right block of the sketched
``Z^T Z``.
"""
from __future__ import annotations

import numpy as np

from .fd import FrequentDirections
from .linalg import DimensionError
from .scod import QSchedule, SparseCoOccurringDirections
from .sparse import SparseRow, as_sparse_row


def concat_rows(x_row, y_row, dx: int, dy: int) -> SparseRow:
    x = as_sparse_row(x_row, dx)
    y = as_sparse_row(y_row, dy)
    return SparseRow(
        np.concatenate([x.indices, y.indices + dx]),
        np.concatenate([x.values, y.values]),
        dx + dy,
    )


class FDAMM:
    """Frequent Directions on the concatenated rows ``[x, y]``."""

    def __init__(self, m: int, dx: int, dy: int, **fd_kwargs):
        if dx < 1 or dy < 1:
            raise ValueError("dx and dy must be >= 1")
        self.dx, self.dy = dx, dy
        self.inner = FrequentDirections(m, dx + dy, **fd_kwargs)

    def update(self, x_row, y_row) -> None:
        if isinstance(x_row, SparseRow) or isinstance(y_row, SparseRow):
            self.inner.update(concat_rows(x_row, y_row, self.dx, self.dy))
            return
        x = np.asarray(x_row, dtype=float)
        y = np.asarray(y_row, dtype=float)
        if x.shape != (self.dx,) or y.shape != (self.dy,):
            raise DimensionError(f"rows have shapes {x.shape}, {y.shape}; expected ({self.dx},), ({self.dy},)")
        self.inner.update(np.concatenate([x, y]))

    def extend(self, pairs) -> "FDAMM":
        for x, y in pairs:
            self.update(x, y)
        return self

    def finalize(self) -> tuple[np.ndarray, np.ndarray]:
        c = self.inner.finalize()
        return c[:, : self.dx], c[:, self.dx :]


class SFDAMM:
    """Sparse-engine variant of FD-AMM: SCOD on ``(Z, Z)``, factors split by column."""

    def __init__(
        self,
        m: int,
        dx: int,
        dy: int,
        schedule: QSchedule | None = None,
        seed: int = 0,
        **scod_kwargs,
    ):
        if dx < 1 or dy < 1:
            raise ValueError("dx and dy must be >= 1")
        self.dx, self.dy = dx, dy
        d = dx + dy
        self.inner = SparseCoOccurringDirections(m, d, d, schedule, seed, **scod_kwargs)

    def update(self, x_row, y_row) -> None:
        z = concat_rows(x_row, y_row, self.dx, self.dy)
        self.inner.update(z, z)

    def extend(self, pairs) -> "SFDAMM":
        for x, y in pairs:
            self.update(x, y)
        return self

    def finalize(self) -> tuple[np.ndarray, np.ndarray]:
        a, b, _, _ = self.inner.finalize()
        return a[:, : self.dx], b[:, self.dx :]

    @property
    def flush_count(self) -> int:
        return self.inner.flush_index

    @property
    def delta_sum(self) -> float:
        return self.inner.delta_sum
