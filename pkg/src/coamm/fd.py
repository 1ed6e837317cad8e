"""Frequent Directions covariance sketch."""
from __future__ import annotations

import numpy as np

from .linalg import DimensionError, KernelError
from .sparse import SparseRow


class FrequentDirections:
    """One-pass sketch ``A`` (2m x d) with ``A.T @ A`` approximating ``X.T @ X``.

    Rows are written into free slots; when the last slot fills the sketch is
    compacted: every squared singular value is reduced by the m-th one, which
    leaves at most m - 1 nonzero rows and m + 1 free slots.

    Parameters
    ----------
    m : int
        Sketch size; the buffer holds ``2 * m`` rows.
    d : int
        Row length.
    shrink : bool
        Subtract the m-th squared singular value on compaction. Turning this
        off truncates instead, which voids the error guarantee; it exists so
        the verification suite can show that it notices.
    """

    def __init__(self, m: int, d: int, *, shrink: bool = True):
        if m < 1 or d < 1:
            raise ValueError(f"need m >= 1 and d >= 1, got m={m}, d={d}")
        self.m = m
        self.d = d
        self.shrink = shrink
        self._a = np.zeros((2 * m, d))
        self._fill = 0
        self.rows_seen = 0
        self.n_compactions = 0

    def update(self, row) -> None:
        if isinstance(row, SparseRow):
            if row.size != self.d:
                raise DimensionError(f"row has length {row.size}, expected {self.d}")
            slot = self._a[self._fill]
            slot[:] = 0.0
            slot[row.indices] = row.values
        else:
            x = np.asarray(row, dtype=float)
            if x.shape != (self.d,):
                raise DimensionError(f"row has shape {x.shape}, expected ({self.d},)")
            self._a[self._fill] = x
        if not np.all(np.isfinite(self._a[self._fill])):
            self._a[self._fill] = 0.0
            raise ValueError("row contains NaN or Inf")
        self._fill += 1
        self.rows_seen += 1
        if self._fill == 2 * self.m:
            self.compact()

    def extend(self, rows) -> "FrequentDirections":
        for r in rows:
            self.update(r)
        return self

    def compact(self) -> float:
        """Shrink the sketch now; returns the threshold (squared) that was removed."""
        m = self.m
        try:
            _, s, vt = np.linalg.svd(self._a, full_matrices=False)
        except np.linalg.LinAlgError as exc:
            raise KernelError(f"SVD failed on {self._a.shape} FD buffer") from exc
        delta = s[m - 1] ** 2 if s.size >= m else 0.0
        if self.shrink:
            s_hat = np.sqrt(np.maximum(s**2 - delta, 0.0))
        else:
            s_hat = s.copy()
        a = np.zeros_like(self._a)
        k = min(m - 1, s.size)
        a[:k] = s_hat[:k, None] * vt[:k]
        self._a = a
        self._fill = m - 1
        self.n_compactions += 1
        return float(delta)

    @property
    def sketch(self) -> np.ndarray:
        return self._a.copy()

    def finalize(self) -> np.ndarray:
        """Current 2m x d sketch; no extra compaction."""
        return self.sketch
