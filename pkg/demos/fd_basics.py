"""Frequent Directions on a small stream, with and without the shrink step.

Run: python demos/fd_basics.py
"""
import numpy as np

from coamm import oracle
from coamm.fd import FrequentDirections
from coamm.verify import fd_adversarial_stream

rng = np.random.default_rng(0)

# A stream with a decaying spectrum: most energy sits in a few directions.
n, d, m = 400, 30, 8
basis = np.linalg.qr(rng.standard_normal((d, d)))[0]
x = (rng.standard_normal((n, d)) * 0.7 ** np.arange(d)) @ basis.T

fd = FrequentDirections(m, d).extend(x)
sketch = fd.finalize()
err = np.linalg.norm(x.T @ x - sketch.T @ sketch, 2)
print(f"{n}x{d} stream, sketch of {2 * m} rows, {fd.n_compactions} compactions")
print(f"covariance error  {err:.4f}")
s = np.linalg.svd(x, compute_uv=False)
for k in (0, 2, 4, m - 1):
    print(f"  bound at k={k}:     {oracle.bound_lemma1(x, m, k, s):.4f}")

# The shrink step is what makes the bound hold. One big row followed by
# many small orthogonal ones shows the difference.
x = fd_adversarial_stream(m=2)
for shrink in (True, False):
    a = FrequentDirections(2, 2, shrink=shrink).extend(x).finalize()
    err = np.linalg.norm(x.T @ x - a.T @ a, 2)
    label = "shrink  " if shrink else "truncate"
    print(f"{label} error {err:6.2f}   bound at k=1: {oracle.bound_lemma1(x, 2, 1):.2f}")
