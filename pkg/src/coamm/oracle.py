"""Exact desk-scale reference computations and the error bounds they check.

Everything here materializes ``X^T Y`` (guarded by ``DENSE_GUARD``) except
the implicit error mode, which only applies the inputs to vectors.
"""
from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import LinearOperator, svds

from .linalg import singular_values, spectral_norm
from .sparse import frobenius

DENSE_GUARD = 4_000_000


class OracleGuardError(MemoryError):
    """The dense reference would exceed the size guard."""


def _as_matrix(a):
    return a if sp.issparse(a) else np.asarray(a, dtype=float)


def _check_guard(dx: int, dy: int) -> None:
    if dx * dy > DENSE_GUARD:
        raise OracleGuardError(
            f"dense {dx}x{dy} product exceeds the {DENSE_GUARD:,} entry guard; "
            "use the implicit error mode instead"
        )


def exact_product(x, y) -> np.ndarray:
    """Dense ``X^T Y``."""
    x, y = _as_matrix(x), _as_matrix(y)
    if x.shape[0] != y.shape[0]:
        raise ValueError(f"row counts differ: {x.shape[0]} vs {y.shape[0]}")
    _check_guard(x.shape[1], y.shape[1])
    out = x.T @ y
    return out.toarray() if sp.issparse(out) else np.asarray(out)


def product_operator(x, y, a=None, b=None) -> LinearOperator:
    """``v -> X^T (Y v) - A^T (B v)`` and its adjoint, never materialized."""
    x, y = _as_matrix(x), _as_matrix(y)
    if a is None:
        a = np.zeros((0, x.shape[1]))
        b = np.zeros((0, y.shape[1]))
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)

    def mv(v):
        v = np.ravel(v)
        return x.T @ (y @ v) - a.T @ (b @ v)

    def rmv(u):
        u = np.ravel(u)
        return y.T @ (x @ u) - b.T @ (a @ u)

    return LinearOperator((x.shape[1], y.shape[1]), matvec=mv, rmatvec=rmv, dtype=float)


def amm_error(x, y, a, b, mode: str = "dense", seed: int = 0) -> float:
    """Spectral norm of ``X^T Y - A^T B``.

    ``dense`` materializes the difference; ``implicit`` runs power iteration
    on the operator at relative tolerance 1e-6 (well below it in practice).
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if mode == "dense":
        diff = exact_product(x, y) - a.T @ b
        sv = singular_values(diff)
        return float(sv[0]) if sv.size else 0.0
    if mode == "implicit":
        return spectral_norm(product_operator(x, y, a, b), tol=1e-9, max_iter=5000, seed=seed)
    raise ValueError(f"unknown error mode {mode!r}")


def frobenius_product(x, y) -> float:
    return frobenius(_as_matrix(x)) * frobenius(_as_matrix(y))


def _check_k(m: int, k: int) -> None:
    if not 0 <= k < m:
        raise ValueError(f"need 0 <= k < m, got k={k}, m={m}")


def _top_singular(x, y, count: int) -> np.ndarray:
    """Top ``count`` singular values of X^T Y (dense if allowed, else svds)."""
    x, y = _as_matrix(x), _as_matrix(y)
    dx, dy = x.shape[1], y.shape[1]
    if dx * dy <= DENSE_GUARD:
        return singular_values(exact_product(x, y))[:count]
    if count == 0:
        return np.zeros(0)
    k = min(count, min(dx, dy) - 1)
    s = svds(product_operator(x, y), k=k, return_singular_vectors=False, random_state=0)
    return np.sort(s)[::-1]


def xty_spectrum(x, y) -> np.ndarray:
    return singular_values(exact_product(x, y))


def bound_lemma1(x, m: int, k: int, sigma_x: np.ndarray | None = None) -> float:
    """Frequent Directions bound ``(||X||_F^2 - ||X_k||_F^2) / (m - k)``."""
    _check_k(m, k)
    s = singular_values(np.asarray(x.toarray() if sp.issparse(x) else x)) if sigma_x is None else sigma_x
    fro2 = float(np.sum(s**2))
    return max(fro2 - float(np.sum(s[:k] ** 2)), 0.0) / (m - k)


def bound_lemma2(x, y, m: int) -> float:
    """Classic co-occurring directions bound ``||X||_F ||Y||_F / m``."""
    return frobenius_product(x, y) / m


def bound_theorem1(x, y, m: int, k: int, sigma_xty: np.ndarray | None = None) -> float:
    """``(||X||_F ||Y||_F - ||X^T Y||_k) / (m - k)``."""
    _check_k(m, k)
    s = _top_singular(x, y, k) if sigma_xty is None else sigma_xty
    return max(frobenius_product(x, y) - float(np.sum(s[:k])), 0.0) / (m - k)


def theorem1_per_k(x, y, m: int, sigma_xty: np.ndarray | None = None) -> np.ndarray:
    """Improved-bound right-hand side for every k in 0..m-1."""
    s = _top_singular(x, y, m - 1) if sigma_xty is None else sigma_xty
    fp = frobenius_product(x, y)
    kyfan = np.concatenate([[0.0], np.cumsum(s[: m - 1])])
    kyfan = np.pad(kyfan, (0, m - len(kyfan)), mode="edge")
    return np.maximum(fp - kyfan, 0.0) / (m - np.arange(m))


def bound_theorem3(x, y, m: int, k: int, epsilon: float, sigma_xty: np.ndarray | None = None) -> float:
    """Sparse-variant bound ``((2+e)/(m-k) + (1+e) k/(m-k)^2) (||X||_F||Y||_F - ||X^T Y||_k)``."""
    _check_k(m, k)
    if epsilon < 0:
        raise ValueError("epsilon must be >= 0")
    s = _top_singular(x, y, k) if sigma_xty is None else sigma_xty
    gap = max(frobenius_product(x, y) - float(np.sum(s[:k])), 0.0)
    return ((2 + epsilon) / (m - k) + (1 + epsilon) * k / (m - k) ** 2) * gap


def projection_ratio(m_dense: np.ndarray, z: np.ndarray, m: int) -> float:
    """``||M - Z Z^T M|| / sigma_{m+1}(M)``, defined as 1 when that value is ~0."""
    s = singular_values(m_dense)
    resid = m_dense - z @ (z.T @ m_dense)
    rs = singular_values(resid)
    err = float(rs[0]) if rs.size else 0.0
    tail = float(s[m]) if s.size > m else 0.0
    if s.size == 0 or tail <= 1e-12 * s[0]:
        return 1.0
    return err / tail


def measure_epsilon_hat(flush_log, m: int) -> float:
    """Largest observed excess ``max_i ratio_i - 1`` over retained flushes, clamped at 0."""
    worst = 1.0
    for rec in flush_log:
        if rec.x_buf is None or rec.z is None:
            raise ValueError("flush diagnostics were not retained (use keep_flushes=True)")
        mi = exact_product(rec.x_buf, rec.y_buf)
        worst = max(worst, projection_ratio(mi, rec.z, m))
    return max(worst - 1.0, 0.0)


def lemma3_checks(x, y, a, b, m: int, delta_sum: float, rtol: float = 1e-9):
    """``(err <= Delta, ||A^T B||_* <= ||X||_F ||Y||_F - m Delta)`` with float slack."""
    scale = frobenius_product(x, y)
    err = amm_error(x, y, a, b)
    ab = np.asarray(a).T @ np.asarray(b)
    nuc = float(np.sum(singular_values(ab)))
    ok_i = err <= delta_sum + rtol * scale
    ok_ii = nuc <= scale - m * delta_sum + rtol * scale
    return ok_i, ok_ii


def lemma4_check(x, y, a, b, m: int, delta_sum: float, rtol: float = 1e-9) -> bool:
    """``||X^T Y||_* - ||A^T B||_* <= sum_{i>k} sigma_i(X^T Y) + k Delta`` for all k < m."""
    s = xty_spectrum(x, y)
    ab = np.asarray(a).T @ np.asarray(b)
    lhs = float(np.sum(s)) - float(np.sum(singular_values(ab)))
    scale = frobenius_product(x, y)
    for k in range(m):
        if lhs > float(np.sum(s[k:])) + k * delta_sum + rtol * scale:
            return False
    return True


@dataclass
class BoundReport:
    exact_spectral_error: float
    relative_error: float
    rel_error_denominator: str
    frob_product: float
    lemma2_rhs: float
    theorem1_rhs_per_k: np.ndarray
    theorem1_rhs_min: float
    lemma3_delta: float | None = None
    lemma3_check_i: bool | None = None
    lemma3_check_ii: bool | None = None
    lemma4_check: bool | None = None
    measured_epsilon_hat: float | None = None
    wall_time_ms: dict = field(default_factory=dict)
    theorem3_rhs: Callable[[int, float], float] | None = field(default=None, repr=False)


def bound_report(
    x,
    y,
    a,
    b,
    m: int,
    *,
    delta_sum: float | None = None,
    error_mode: str = "dense",
    denominator: str = "frob_product",
    flush_log=None,
    wall_time_ms: dict | None = None,
) -> BoundReport:
    """Evaluate the error of ``(A, B)`` and every applicable bound.

    ``m`` is the sketch parameter the bounds are stated for. The shrink-mass
    checks run when ``delta_sum`` is given and the dense guard permits.
    """
    t0 = time.perf_counter()
    x, y = _as_matrix(x), _as_matrix(y)
    dense_ok = x.shape[1] * y.shape[1] <= DENSE_GUARD
    if error_mode == "dense" and not dense_ok:
        _check_guard(x.shape[1], y.shape[1])
    err = amm_error(x, y, a, b, mode=error_mode)
    fp = frobenius_product(x, y)
    sigma = xty_spectrum(x, y) if dense_ok else _top_singular(x, y, m - 1)
    if denominator == "frob_product":
        denom = fp
    elif denominator == "exact_spectral":
        denom = float(sigma[0]) if sigma.size else 0.0
    else:
        raise ValueError(f"unknown denominator {denominator!r}")
    per_k = theorem1_per_k(x, y, m, sigma)
    report = BoundReport(
        exact_spectral_error=err,
        relative_error=err / denom if denom > 0 else (0.0 if err == 0 else math.inf),
        rel_error_denominator=denominator,
        frob_product=fp,
        lemma2_rhs=fp / m,
        theorem1_rhs_per_k=per_k,
        theorem1_rhs_min=float(per_k.min()),
        theorem3_rhs=lambda k, eps: bound_theorem3(x, y, m, k, eps, sigma),
    )
    if delta_sum is not None and dense_ok:
        report.lemma3_delta = delta_sum
        report.lemma3_check_i, report.lemma3_check_ii = lemma3_checks(x, y, a, b, m, delta_sum)
        report.lemma4_check = lemma4_check(x, y, a, b, m, delta_sum)
    if flush_log is not None and dense_ok and all(r.z is not None for r in flush_log):
        report.measured_epsilon_hat = measure_epsilon_hat(flush_log, m)
    report.wall_time_ms = dict(wall_time_ms or {})
    report.wall_time_ms["oracle"] = 1e3 * (time.perf_counter() - t0)
    return report
