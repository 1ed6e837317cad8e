"""Sparse Co-occurring Directions.

Sparse row pairs are buffered until the buffers hold more than
``m * (dx + dy)`` nonzeros or ``dx + dy`` rows. A flush compresses the buffered
product ``X'^T Y'`` to rank at most m with the subspace power method, splits
it into balanced factors, and merges those into an m-row co-occurring
directions core.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .cod import co_shrink
from .linalg import KernelError
from .sparse import SparseRowBuffer, as_sparse_row, frobenius
from .spm import SpmConfig, balance_split, subspace_power_method


@dataclass(frozen=True)
class QSchedule:
    """Number of power iterations per flush.

    ``fixed`` uses the same q for every flush. ``theoretical`` grows q with
    the flush index i as ``ceil(c_q * log2(m * dx * 2 i^2 / delta_fail) / epsilon)``,
    i.e. logarithmically, so the per-flush failure probabilities sum to at
    most ``delta_fail``. ``c_q`` stands in for unspecified constants.
    """

    mode: str = "fixed"
    q: int = 5
    epsilon: float = 1.0
    delta_fail: float = 0.1
    c_q: float = 1.0

    def __post_init__(self):
        if self.mode == "fixed":
            if self.q < 1:
                raise ValueError("fixed schedule needs q >= 1")
        elif self.mode == "theoretical":
            if self.epsilon <= 0 or not 0 < self.delta_fail < 1 or self.c_q <= 0:
                raise ValueError("theoretical schedule needs epsilon > 0, 0 < delta_fail < 1, c_q > 0")
        else:
            raise ValueError(f"unknown schedule mode {self.mode!r}")

    @classmethod
    def fixed(cls, q: int = 5) -> "QSchedule":
        return cls("fixed", q=q)

    @classmethod
    def theoretical(cls, epsilon: float, delta_fail: float, c_q: float = 1.0) -> "QSchedule":
        return cls("theoretical", epsilon=epsilon, delta_fail=delta_fail, c_q=c_q)

    def q_for(self, i: int, m: int, dx: int) -> int:
        """q for the i-th flush (1-based)."""
        if self.mode == "fixed":
            return self.q
        arg = m * dx * 2 * i * i / self.delta_fail
        return max(1, math.ceil(self.c_q * math.log2(arg) / self.epsilon))


@dataclass
class FlushRecord:
    index: int
    rows: int
    nnz_x: int
    nnz_y: int
    q: int
    shrink_delta: float
    buffer_frobenius: tuple[float, float]
    tilde_frobenius: tuple[float, float]
    # filled only when the sketch retains diagnostics
    x_buf: object = None
    y_buf: object = None
    z: np.ndarray | None = None
    x_tilde: np.ndarray | None = None
    y_tilde: np.ndarray | None = None


class SparseCoOccurringDirections:
    """Streaming sketch ``(A, B)`` with m rows each for sparse inputs.

    Parameters
    ----------
    m, dx, dy : int
        Sketch size and the two row lengths.
    schedule : QSchedule
        Power iterations per flush; ``QSchedule.fixed(5)`` by default.
    seed : int
        Root seed; flush i draws its Gaussian test matrix from
        ``SeedSequence(seed, spawn_key=(i,))``.
    keep_flushes : bool
        Retain per-flush buffers, bases and compressed factors for offline
        diagnostics. Costs memory proportional to the input.
    reorthonormalize : bool
        Passed to the subspace power method.
    """

    def __init__(
        self,
        m: int,
        dx: int,
        dy: int,
        schedule: QSchedule | None = None,
        seed: int = 0,
        *,
        keep_flushes: bool = False,
        reorthonormalize: bool = True,
    ):
        if m < 1 or dx < 1 or dy < 1:
            raise ValueError(f"need m, dx, dy >= 1, got m={m}, dx={dx}, dy={dy}")
        self.m, self.dx, self.dy = m, dx, dy
        self.schedule = schedule if schedule is not None else QSchedule.fixed(5)
        if not isinstance(self.schedule, QSchedule):
            raise TypeError("schedule must be a QSchedule")
        self.seed = seed
        self.keep_flushes = keep_flushes
        self.reorthonormalize = reorthonormalize
        self.a = np.zeros((m, dx))
        self.b = np.zeros((m, dy))
        self.x_buf = SparseRowBuffer(dx)
        self.y_buf = SparseRowBuffer(dy)
        self.flush_index = 0
        self.rows_seen = 0
        self.delta_sum = 0.0
        self.flush_log: list[FlushRecord] = []
        self._nnz_cap = m * (dx + dy)
        self._row_cap = dx + dy

    def update(self, x_row, y_row) -> None:
        x = as_sparse_row(x_row, self.dx)
        y = as_sparse_row(y_row, self.dy)
        self.x_buf._append_trusted(x)
        self.y_buf._append_trusted(y)
        self.rows_seen += 1
        if self.x_buf.nnz + self.y_buf.nnz > self._nnz_cap or self.x_buf.rows == self._row_cap:
            self.flush()

    def extend(self, pairs) -> "SparseCoOccurringDirections":
        for x, y in pairs:
            self.update(x, y)
        return self

    def flush(self) -> None:
        """Compress the buffers and merge them into the core; no-op when empty."""
        if self.x_buf.rows == 0:
            return
        i = self.flush_index + 1
        q = self.schedule.q_for(i, self.m, self.dx)
        xb, yb = self.x_buf.to_csr(), self.y_buf.to_csr()
        cfg = SpmConfig(
            self.m,
            q,
            np.random.SeedSequence(self.seed, spawn_key=(i,)),
            self.reorthonormalize,
        )
        try:
            z = subspace_power_method(xb, yb, cfg)
            x_t, y_t = balance_split(z, xb, yb)
            a_new, b_new, delta = co_shrink(
                np.vstack([self.a, x_t]), np.vstack([self.b, y_t]), self.m
            )
        except KernelError as exc:
            raise KernelError(f"flush {i}: {exc}") from exc
        # shrinking by the m-th value zeroes every row from index m - 1 on
        keep = min(self.m, a_new.shape[0])
        self.a = np.zeros((self.m, self.dx))
        self.b = np.zeros((self.m, self.dy))
        self.a[:keep] = a_new[:keep]
        self.b[:keep] = b_new[:keep]
        self.delta_sum += delta
        self.flush_index = i
        rec = FlushRecord(
            index=i,
            rows=xb.shape[0],
            nnz_x=xb.nnz,
            nnz_y=yb.nnz,
            q=q,
            shrink_delta=delta,
            buffer_frobenius=(frobenius(xb), frobenius(yb)),
            tilde_frobenius=(frobenius(x_t), frobenius(y_t)),
        )
        if self.keep_flushes:
            rec.x_buf, rec.y_buf, rec.z = xb, yb, z
            rec.x_tilde, rec.y_tilde = x_t, y_t
        self.flush_log.append(rec)
        self.x_buf.clear()
        self.y_buf.clear()

    def finalize(self) -> tuple[np.ndarray, np.ndarray, float, int]:
        """Flush what is buffered and return ``(A, B, delta_sum, flush_count)``."""
        self.flush()
        return self.a.copy(), self.b.copy(), self.delta_sum, self.flush_index
