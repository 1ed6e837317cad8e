"""Reading and generating aligned sparse row pairs.

Matrix Market support is limited to ``coordinate real general`` files, the
format the benchmark corpora are converted to.
"""
from __future__ import annotations

import logging
from dataclasses import asdict, dataclass, fields
from pathlib import Path

import numpy as np
import scipy.sparse as sp

from .sparse import SparseRow

log = logging.getLogger(__name__)

MM_HEADER = "%%MatrixMarket matrix coordinate real general"

# name -> (n, dx, dy, density_x, density_y) of the cross-language corpora
TABLE1 = {
    "APR (EN-FR)": (2.32e4, 2.80e4, 4.28e4, 6.31e-4, 4.53e-4),
    "PAN (EN-FR)": (8.90e4, 5.12e4, 9.96e4, 4.38e-4, 2.43e-4),
    "JRC (EN-FR)": (1.50e5, 1.72e5, 1.87e5, 1.65e-4, 1.64e-4),
    "JRC (EN-ES)": (1.50e5, 1.72e5, 1.92e5, 1.65e-4, 1.60e-4),
    "JRC (FR-ES)": (1.50e5, 1.87e5, 1.92e5, 1.64e-4, 1.60e-4),
    "EURO (EN-FR)": (4.76e5, 7.25e4, 8.77e4, 3.46e-4, 3.65e-4),
    "EURO (EN-ES)": (4.76e5, 7.25e4, 8.80e4, 3.46e-4, 3.47e-4),
    "EURO (FR-ES)": (4.76e5, 8.77e4, 8.80e4, 3.65e-4, 3.47e-4),
}


class MatrixMarketError(ValueError):
    def __init__(self, msg: str, line: int | None = None):
        self.line = line
        super().__init__(f"line {line}: {msg}" if line is not None else msg)


class AlignmentError(ValueError):
    pass


class StreamConsumedError(RuntimeError):
    pass


def read_matrix_market(path, *, with_stats: bool = False):
    """Parse a 1-indexed ``coordinate real general`` Matrix Market file.

    Duplicate coordinates are rejected; explicit zeros are dropped. With
    ``with_stats`` returns ``(matrix, dropped_zeros)`` instead of the matrix.
    """
    path = Path(path)
    rows: list[int] = []
    cols: list[int] = []
    vals: list[float] = []
    shape = None
    declared_nnz = 0
    dropped = 0
    with path.open() as fh:
        header = fh.readline()
        if header.strip().split() != MM_HEADER.split():
            got = " ".join(header.split()) or "<empty>"
            raise MatrixMarketError(f"expected header {MM_HEADER!r}, got {got!r}", 1)
        for lineno, line in enumerate(fh, start=2):
            s = line.strip()
            if not s or s.startswith("%"):
                continue
            parts = s.split()
            if shape is None:
                if len(parts) != 3:
                    raise MatrixMarketError("size line must be 'rows cols nnz'", lineno)
                try:
                    n, d, declared_nnz = (int(p) for p in parts)
                except ValueError:
                    raise MatrixMarketError(f"non-integer size line {s!r}", lineno) from None
                if min(n, d, declared_nnz) < 0:
                    raise MatrixMarketError("negative size", lineno)
                shape = (n, d)
                continue
            if len(parts) != 3:
                raise MatrixMarketError(f"expected 'row col value', got {s!r}", lineno)
            try:
                i, j = int(parts[0]), int(parts[1])
            except ValueError:
                raise MatrixMarketError(f"non-integer index in {s!r}", lineno) from None
            try:
                v = float(parts[2])
            except ValueError:
                raise MatrixMarketError(f"non-real value {parts[2]!r}", lineno) from None
            if not np.isfinite(v):
                raise MatrixMarketError(f"non-finite value {parts[2]!r}", lineno)
            if not (1 <= i <= shape[0] and 1 <= j <= shape[1]):
                raise MatrixMarketError(f"index ({i}, {j}) outside {shape[0]}x{shape[1]}", lineno)
            rows.append(i - 1)
            cols.append(j - 1)
            vals.append(v)
    if shape is None:
        raise MatrixMarketError("missing size line")
    if len(vals) != declared_nnz:
        raise MatrixMarketError(f"size line declares {declared_nnz} entries, found {len(vals)}")
    r = np.asarray(rows, dtype=np.int64)
    c = np.asarray(cols, dtype=np.int64)
    v = np.asarray(vals, dtype=float)
    if len(v):
        key = r * shape[1] + c
        uniq, first, counts = np.unique(key, return_index=True, return_counts=True)
        if np.any(counts > 1):
            bad = first[np.argmax(counts > 1)]
            raise MatrixMarketError(f"duplicate coordinate ({r[bad] + 1}, {c[bad] + 1})")
    nz = v != 0
    dropped = int(np.count_nonzero(~nz))
    if dropped:
        log.info("%s: dropped %d explicit zeros", path, dropped)
    m = sp.csr_array((v[nz], (r[nz], c[nz])), shape=shape)
    m.sort_indices()
    return (m, dropped) if with_stats else m


def write_matrix_market(path, matrix, comment: str | None = None) -> None:
    """Write a sparse or dense matrix as ``coordinate real general``."""
    coo = sp.coo_array(sp.csr_array(matrix))
    coo.sum_duplicates()
    order = np.lexsort((coo.col, coo.row))
    with Path(path).open("w") as fh:
        fh.write(MM_HEADER + "\n")
        if comment:
            for line in comment.splitlines():
                fh.write(f"% {line}\n")
        fh.write(f"{coo.shape[0]} {coo.shape[1]} {coo.nnz}\n")
        for i, j, v in zip(coo.row[order].tolist(), coo.col[order].tolist(), coo.data[order].tolist()):
            fh.write(f"{i + 1} {j + 1} {v!r}\n")


def check_table1_metadata(
    dataset: str, side: str, n: int, d: int, nnz: int | None = None, rel_tol: float = 0.1
) -> list[str]:
    """Compare an ingested corpus side (``"x"`` or ``"y"``) with the published
    sizes and density; returns a list of mismatch messages (empty when fine).
    """
    try:
        ref_n, ref_dx, ref_dy, dens_x, dens_y = TABLE1[dataset]
    except KeyError:
        raise KeyError(f"unknown dataset {dataset!r}; known: {sorted(TABLE1)}") from None
    ref_d, ref_dens = (ref_dx, dens_x) if side == "x" else (ref_dy, dens_y)
    problems = []
    # the published sizes carry three significant figures
    size_tol = 0.005
    if abs(n - ref_n) > size_tol * ref_n:
        problems.append(f"n={n} differs from published {ref_n:.3g}")
    if abs(d - ref_d) > size_tol * ref_d:
        problems.append(f"d={d} differs from published {ref_d:.3g}")
    if nnz is not None:
        dens = nnz / (n * d)
        if abs(dens - ref_dens) > rel_tol * ref_dens:
            problems.append(f"density {dens:.3g} not within {rel_tol:.0%} of {ref_dens:.3g}")
    return problems


@dataclass(frozen=True)
class SynthConfig:
    """Correlated low-rank pair with decaying spectrum, noise and sparsification."""

    n: int
    dx: int
    dy: int
    rank: int = 10
    decay: float = 0.8
    noise: float = 0.0
    density: float = 1.0
    seed: int = 0

    def __post_init__(self):
        if min(self.n, self.dx, self.dy) < 1:
            raise ValueError("n, dx, dy must be >= 1")
        if not 1 <= self.rank <= min(self.dx, self.dy):
            raise ValueError(f"rank must be in [1, min(dx, dy)] = [1, {min(self.dx, self.dy)}]")
        if not 0 < self.decay <= 1:
            raise ValueError("decay must be in (0, 1]")
        if self.noise < 0:
            raise ValueError("noise must be >= 0")
        if not 0 < self.density <= 1:
            raise ValueError("density must be in (0, 1]")

    @classmethod
    def from_text(cls, text: str) -> "SynthConfig":
        """Parse ``key=value`` pairs separated by whitespace, commas or newlines.

        Lines starting with ``#`` are ignored.
        """
        types = {f.name: f.type for f in fields(cls)}
        kw = {}
        for line in text.splitlines():
            line = line.split("#", 1)[0]
            for tok in line.replace(",", " ").split():
                if "=" not in tok:
                    raise ValueError(f"expected key=value, got {tok!r}")
                k, v = tok.split("=", 1)
                k = k.strip()
                if k not in types:
                    raise ValueError(f"unknown synthetic config key {k!r}")
                kw[k] = int(v) if types[k] in (int, "int") else float(v)
        return cls(**kw)

    def to_text(self) -> str:
        return "\n".join(f"{k}={v}" for k, v in asdict(self).items())


_CHUNK = 1024


def synthetic_matrices(cfg: SynthConfig) -> tuple[sp.csr_array, sp.csr_array]:
    """Materialize the synthetic pair as CSR matrices.

    ``X = H S P_x^T + noise * N_x`` and likewise for Y with a shared latent
    ``H`` (n x rank), ``S = diag(decay^i)`` and random orthonormal ``P``. Each
    entry is kept with probability ``density`` and rescaled by ``1/density``.
    Only kept entries are ever evaluated, so memory is O(nnz).
    """
    rng = np.random.default_rng(cfg.seed)
    r = cfg.rank
    s = cfg.decay ** np.arange(r)
    px = np.linalg.qr(rng.standard_normal((cfg.dx, r)))[0]
    py = np.linalg.qr(rng.standard_normal((cfg.dy, r)))[0]
    parts_x, parts_y = [], []
    for start in range(0, cfg.n, _CHUNK):
        c = min(_CHUNK, cfg.n - start)
        hs = rng.standard_normal((c, r)) * s
        parts_x.append(_sparse_side(rng, hs, px, cfg))
        parts_y.append(_sparse_side(rng, hs, py, cfg))
    return sp.csr_array(sp.vstack(parts_x, format="csr")), sp.csr_array(sp.vstack(parts_y, format="csr"))


def _sparse_side(rng, hs, p, cfg: SynthConfig) -> sp.csr_array:
    c, d = hs.shape[0], p.shape[0]
    if cfg.density < 1.0:
        ri, ci = np.nonzero(rng.random((c, d)) < cfg.density)
    else:
        ri, ci = np.divmod(np.arange(c * d), d)
    vals = np.einsum("ij,ij->i", hs[ri], p[ci])
    if cfg.noise > 0:
        vals += cfg.noise * rng.standard_normal(len(vals))
    vals /= cfg.density
    keep = vals != 0
    return sp.csr_array((vals[keep], (ri[keep], ci[keep])), shape=(c, d))


class PairStream:
    """Single-pass iterator over aligned ``(x_row, y_row)`` SparseRow pairs."""

    def __init__(self, x: sp.csr_array, y: sp.csr_array):
        if x.shape[0] != y.shape[0]:
            raise AlignmentError(f"X has {x.shape[0]} rows but Y has {y.shape[0]}")
        self._x = sp.csr_array(x)
        self._y = sp.csr_array(y)
        self._x.sort_indices()
        self._y.sort_indices()
        self.n = x.shape[0]
        self.dx = x.shape[1]
        self.dy = y.shape[1]
        self.nnz_x = int(self._x.nnz)
        self.nnz_y = int(self._y.nnz)
        self._consumed = False

    def __len__(self) -> int:
        return self.n

    def __iter__(self):
        if self._consumed:
            raise StreamConsumedError("pair stream already consumed; re-open the source")
        self._consumed = True
        return self._rows()

    def _rows(self):
        x, y = self._x, self._y
        xp, xi, xv = x.indptr, x.indices, x.data
        yp, yi, yv = y.indptr, y.indices, y.data
        dx, dy = self.dx, self.dy
        for t in range(self.n):
            yield (
                SparseRow(xi[xp[t] : xp[t + 1]], xv[xp[t] : xp[t + 1]], dx),
                SparseRow(yi[yp[t] : yp[t + 1]], yv[yp[t] : yp[t + 1]], dy),
            )


def zip_pair(x, y) -> PairStream:
    """Aligned stream over the rows of two matrices with equal row counts."""
    return PairStream(sp.csr_array(x), sp.csr_array(y))


def gen_synthetic_pair(cfg: SynthConfig) -> PairStream:
    return PairStream(*synthetic_matrices(cfg))


def open_pair(x_path, y_path) -> PairStream:
    return PairStream(read_matrix_market(x_path), read_matrix_market(y_path))
