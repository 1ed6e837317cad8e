"""Co-occurring Directions: a paired streaming sketch for X^T Y."""
from __future__ import annotations

import numpy as np

from .linalg import DimensionError, KernelError
from .sparse import SparseRow


def co_shrink(a: np.ndarray, b: np.ndarray, m: int, delta_index: int | None = None):
    """Joint shrink of a factor pair.

    QR-factors ``a.T`` and ``b.T``, takes the SVD of the small interaction
    matrix ``R_x R_y^T``, subtracts its ``delta_index``-th singular value
    (default ``m``) from the spectrum and splits the result evenly between
    the two factors.

    Returns ``(a_new, b_new, delta)`` where the new factors have
    ``min(kx, ky)`` rows, ``kx = min(dx, rows)`` and ``ky = min(dy, rows)``,
    sorted by decreasing shrunk singular value.
    """
    j = m if delta_index is None else delta_index
    try:
        qx, rx = np.linalg.qr(a.T, mode="reduced")
        qy, ry = np.linalg.qr(b.T, mode="reduced")
        u, s, vt = np.linalg.svd(rx @ ry.T, full_matrices=False)
    except np.linalg.LinAlgError as exc:
        raise KernelError(f"factorization failed for factors {a.shape} / {b.shape}") from exc
    delta = float(s[j - 1]) if s.size >= j else 0.0
    root = np.sqrt(np.maximum(s - delta, 0.0))
    a_new = root[:, None] * (qx @ u).T
    b_new = root[:, None] * (qy @ vt.T).T
    return a_new, b_new, delta


class CoOccurringDirections:
    """Streaming sketch ``(A, B)``, each with 2m rows, such that ``A.T @ B ~ X.T @ Y``.

    Row pairs are written into the same free slot of ``A`` and ``B``; when the
    buffers fill, :func:`co_shrink` reduces the pair to rank at most m - 1.
    ``delta_sum`` accumulates the removed thresholds and bounds the spectral
    error of the sketch.

    ``delta_index`` selects which singular value is used as the threshold. It
    only exists for mutation testing; anything but the default breaks the
    free-slot bookkeeping and the error guarantee.
    """

    def __init__(
        self,
        m: int,
        dx: int,
        dy: int,
        *,
        keep_deltas: bool = False,
        delta_index: int | None = None,
    ):
        if m < 1 or dx < 1 or dy < 1:
            raise ValueError(f"need m, dx, dy >= 1, got m={m}, dx={dx}, dy={dy}")
        self.m, self.dx, self.dy = m, dx, dy
        self._a = np.zeros((2 * m, dx))
        self._b = np.zeros((2 * m, dy))
        self._fill = 0
        self.rows_seen = 0
        self.delta_sum = 0.0
        self.n_compactions = 0
        self.delta_log: list[float] | None = [] if keep_deltas else None
        self.delta_index = delta_index

    def _write(self, target: np.ndarray, row, d: int) -> None:
        slot = target[self._fill]
        if isinstance(row, SparseRow):
            if row.size != d:
                raise DimensionError(f"row has length {row.size}, expected {d}")
            slot[:] = 0.0
            slot[row.indices] = row.values
        else:
            x = np.asarray(row, dtype=float)
            if x.shape != (d,):
                raise DimensionError(f"row has shape {x.shape}, expected ({d},)")
            slot[:] = x

    def update(self, x_row, y_row) -> None:
        self._write(self._a, x_row, self.dx)
        self._write(self._b, y_row, self.dy)
        i = self._fill
        if not (np.all(np.isfinite(self._a[i])) and np.all(np.isfinite(self._b[i]))):
            self._a[i] = 0.0
            self._b[i] = 0.0
            raise ValueError("row contains NaN or Inf")
        self._fill += 1
        self.rows_seen += 1
        if self._fill == 2 * self.m:
            self.compact()

    def extend(self, pairs) -> "CoOccurringDirections":
        for x, y in pairs:
            self.update(x, y)
        return self

    def compact(self) -> float:
        """Shrink now (normally triggered when the buffers fill); returns delta."""
        a_new, b_new, delta = co_shrink(self._a, self._b, self.m, self.delta_index)
        keep = min(self.m - 1, a_new.shape[0])
        self._a = np.zeros_like(self._a)
        self._b = np.zeros_like(self._b)
        self._a[:keep] = a_new[:keep]
        self._b[:keep] = b_new[:keep]
        self._fill = self.m - 1
        self.delta_sum += delta
        self.n_compactions += 1
        if self.delta_log is not None:
            self.delta_log.append(delta)
        return delta

    def finalize(self) -> tuple[np.ndarray, np.ndarray, float]:
        """``(A, B, delta_sum)`` as they stand; no forced compaction."""
        return self._a.copy(), self._b.copy(), self.delta_sum
