"""Dense kernels shared by the sketchers.

Matrices are plain 2-D ``numpy`` float arrays. All functions are pure.
"""
from __future__ import annotations

import warnings
from typing import NamedTuple

import numpy as np
import scipy.linalg as sla
from scipy.sparse.linalg import LinearOperator, aslinearoperator

RANK_RTOL = 1e-12


class KernelError(RuntimeError):
    """A dense factorization failed."""


class DimensionError(ValueError):
    pass


class UnconvergedWarning(RuntimeWarning):
    """Iterative estimate stopped at ``max_iter`` before meeting ``tol``."""


class SvdResult(NamedTuple):
    u: np.ndarray
    singular_values: np.ndarray
    v: np.ndarray


def as_dense(m) -> np.ndarray:
    """Validate and return ``m`` as a finite 2-D float array."""
    a = np.asarray(m, dtype=float)
    if a.ndim != 2:
        raise DimensionError(f"expected a 2-D matrix, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ValueError("matrix contains NaN or Inf")
    return a


def thin_svd(m) -> SvdResult:
    """Condensed SVD keeping only numerically nonzero singular values.

    Values below ``1e-12 * sigma_max`` are treated as zero and dropped, so
    ``u`` is p x r, ``v`` is q x r with r the numerical rank.
    """
    a = as_dense(m)
    p, q = a.shape
    if a.size == 0:
        return SvdResult(np.zeros((p, 0)), np.zeros(0), np.zeros((q, 0)))
    try:
        u, s, vt = np.linalg.svd(a, full_matrices=False)
    except np.linalg.LinAlgError:
        try:
            u, s, vt = sla.svd(a, full_matrices=False, lapack_driver="gesvd")
        except np.linalg.LinAlgError as exc:
            raise KernelError(f"SVD did not converge for {p}x{q} matrix") from exc
    if s.size == 0 or s[0] == 0.0:
        return SvdResult(np.zeros((p, 0)), np.zeros(0), np.zeros((q, 0)))
    r = int(np.count_nonzero(s >= RANK_RTOL * s[0]))
    return SvdResult(u[:, :r], s[:r], vt[:r].T)


def thin_qr(m) -> tuple[np.ndarray, np.ndarray]:
    """Reduced QR of a tall (or square) matrix."""
    a = as_dense(m)
    if a.shape[0] < a.shape[1]:
        raise DimensionError(f"thin_qr needs rows >= cols, got {a.shape}")
    return np.linalg.qr(a, mode="reduced")


def orthonormal_columns(k) -> np.ndarray:
    """Orthonormal basis for the column span of ``k``, one column per rank.

    Rank-deficient input yields fewer columns; no padding.
    """
    return thin_svd(k).u


def spectral_norm(op, tol: float = 1e-7, max_iter: int = 1000, seed: int = 0) -> float:
    """Largest singular value of a linear operator by power iteration on A^T A.

    ``op`` is anything :func:`scipy.sparse.linalg.aslinearoperator` accepts;
    only ``matvec`` and ``rmatvec`` are used. Emits :class:`UnconvergedWarning`
    and returns the best estimate if ``max_iter`` is reached.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    A: LinearOperator = aslinearoperator(op)
    n_in = A.shape[1]
    if min(A.shape) == 0:
        return 0.0
    rng = np.random.default_rng(seed)
    v = rng.standard_normal(n_in)
    v /= np.linalg.norm(v)
    est = 0.0
    for it in range(max_iter):
        w = A.matvec(v)
        new = float(np.linalg.norm(w))
        if new == 0.0:
            # start vector in the null space; an exactly zero operator stays zero
            if it == 0:
                v = rng.standard_normal(n_in)
                v /= np.linalg.norm(v)
                continue
            return 0.0
        g = A.rmatvec(w)
        gn = np.linalg.norm(g)
        if gn == 0.0:
            return new
        v = g / gn
        if abs(new - est) <= tol * new:
            return max(new, est)
        est = new
    warnings.warn(
        f"spectral_norm unconverged after {max_iter} iterations (estimate {est:.6g})",
        UnconvergedWarning,
        stacklevel=2,
    )
    return est


def singular_values(m) -> np.ndarray:
    """All singular values of a dense matrix, nonincreasing (zeros kept)."""
    a = as_dense(m)
    if a.size == 0:
        return np.zeros(0)
    return np.linalg.svd(a, compute_uv=False)


def ky_fan_norm(m, k: int) -> float:
    """Sum of the top ``k`` singular values; saturates at the nuclear norm.

    ``k == 0`` returns 0.
    """
    if k < 0:
        raise ValueError("k must be nonnegative")
    if k == 0:
        return 0.0
    return float(np.sum(singular_values(m)[:k]))


def nuclear_norm(m) -> float:
    return float(np.sum(singular_values(m)))


def shrink_values(sigma, delta: float) -> np.ndarray:
    """Elementwise ``max(sigma - delta, 0)``."""
    if delta < 0:
        raise ValueError("delta must be nonnegative")
    return np.maximum(np.asarray(sigma, dtype=float) - delta, 0.0)
