"""Subspace power method on an implicit product ``M = X'^T Y'`` and the
balanced split of the compressed product into two thin factors.

``M`` is never formed: it is applied through one sparse product with each
buffer.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .linalg import DimensionError, orthonormal_columns, thin_svd
from .sparse import mul_dense, mul_transpose_dense


@dataclass(frozen=True)
class SpmConfig:
    target_rank: int
    power_iterations: int = 5
    seed: int | np.random.SeedSequence | None = 0
    reorthonormalize: bool = True

    def __post_init__(self):
        if self.target_rank < 1:
            raise ValueError("target_rank must be >= 1")
        if self.power_iterations < 1:
            raise ValueError("power_iterations must be >= 1")


class BalancedPair(NamedTuple):
    x_tilde: np.ndarray
    y_tilde: np.ndarray


def _check_buffers(x_buf, y_buf) -> None:
    if x_buf.shape[0] != y_buf.shape[0]:
        raise DimensionError(
            f"buffers are not row-aligned: {x_buf.shape[0]} vs {y_buf.shape[0]} rows"
        )


def subspace_power_method(x_buf, y_buf, cfg: SpmConfig) -> np.ndarray:
    """Orthonormal basis ``Z`` (dx x m') of the range of ``(M M^T)^q M G``.

    ``G`` is a seeded standard normal dy x m matrix. With
    ``cfg.reorthonormalize`` (the default) the iterate is orthonormalized
    after every application of ``M`` or ``M^T``; this keeps the span and
    avoids the ill-conditioning of the raw power. Rank-deficient iterates
    give m' < m columns.
    """
    _check_buffers(x_buf, y_buf)
    dx, dy = x_buf.shape[1], y_buf.shape[1]
    m = cfg.target_rank
    if x_buf.shape[0] == 0:
        return np.zeros((dx, 0))
    rng = np.random.default_rng(cfg.seed)
    g = rng.standard_normal((dy, m))

    def apply_m(w):  # dy x k -> dx x k
        return mul_transpose_dense(x_buf, mul_dense(y_buf, w))

    def apply_mt(w):  # dx x k -> dy x k
        return mul_transpose_dense(y_buf, mul_dense(x_buf, w))

    if cfg.reorthonormalize:
        k = orthonormal_columns(apply_m(g))
        for _ in range(cfg.power_iterations):
            if k.shape[1] == 0:
                break
            w = orthonormal_columns(apply_mt(k))
            if w.shape[1] == 0:
                return np.zeros((dx, 0))
            k = orthonormal_columns(apply_m(w))
        return k
    k = apply_m(g)
    for _ in range(cfg.power_iterations):
        k = apply_m(apply_mt(k))
    return orthonormal_columns(k)


def compressed_product(z: np.ndarray, x_buf, y_buf) -> np.ndarray:
    """``Z^T X'^T Y'`` (m' x dy) via two sparse products."""
    _check_buffers(x_buf, y_buf)
    if z.shape[0] != x_buf.shape[1]:
        raise DimensionError(f"basis has {z.shape[0]} rows, buffer has {x_buf.shape[1]} cols")
    return mul_transpose_dense(y_buf, mul_dense(x_buf, z)).T


def balance_split(z: np.ndarray, x_buf, y_buf) -> BalancedPair:
    """Factor ``Z Z^T X'^T Y'`` as ``x_tilde^T y_tilde`` with shared singular values.

    With ``W = Z^T X'^T Y' = U S V^T``: ``x_tilde = S^{1/2} U^T Z^T`` and
    ``y_tilde = S^{1/2} V^T``. Both factors have rank(W) rows.
    """
    w = compressed_product(z, x_buf, y_buf)
    u, s, v = thin_svd(w)
    root = np.sqrt(s)[:, None]
    return BalancedPair(root * (z @ u).T, root * v.T)
