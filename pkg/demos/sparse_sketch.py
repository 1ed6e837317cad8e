"""Sparse co-occurring directions versus the dense version on a sparse stream.

The sparse variant buffers rows until they hold about m (dx + dy) nonzeros,
compresses the buffer with a few power iterations and merges the result. Its
cost follows nnz instead of n * d.

Run: python demos/sparse_sketch.py
"""
import time

from coamm import oracle
from coamm.cod import CoOccurringDirections
from coamm.data_io import SynthConfig, synthetic_matrices, zip_pair
from coamm.scod import QSchedule, SparseCoOccurringDirections

cfg = SynthConfig(20_000, 1000, 1000, rank=20, decay=0.9, noise=0.05, density=0.005, seed=3)
x, y = synthetic_matrices(cfg)
m = 16
print(f"n={cfg.n}, d={cfg.dx}, nnz={x.nnz + y.nnz}")

t = time.perf_counter()
a, b, _ = CoOccurringDirections(m, cfg.dx, cfg.dy).extend(zip_pair(x, y)).finalize()
cod_s = time.perf_counter() - t
cod_err = oracle.amm_error(x, y, a, b) / oracle.frobenius_product(x, y)
print(f"cod        {cod_s:6.2f}s  rel err {cod_err:.5f}")

for q in (1, 5):
    t = time.perf_counter()
    s = SparseCoOccurringDirections(m, cfg.dx, cfg.dy, QSchedule.fixed(q), seed=0)
    a, b, delta, flushes = s.extend(zip_pair(x, y)).finalize()
    secs = time.perf_counter() - t
    err = oracle.amm_error(x, y, a, b) / oracle.frobenius_product(x, y)
    print(f"scod q={q}  {secs:6.2f}s  rel err {err:.5f}  ({flushes} flushes)")
