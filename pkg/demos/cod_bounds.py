"""How much tighter is the improved co-occurring directions bound?

For correlated, approximately low-rank pairs the Ky Fan term in the improved
bound eats most of ||X||_F ||Y||_F, so the bound drops well below the classic
||X||_F ||Y||_F / m. For unrelated pairs the two bounds are close.

Run: python demos/cod_bounds.py
"""
import numpy as np

from coamm import oracle
from coamm.cod import CoOccurringDirections
from coamm.data_io import SynthConfig, synthetic_matrices, zip_pair

m = 16
print(f"{'pair':<22}{'error':>10}{'classic':>10}{'improved':>10}{'ratio':>8}")
for label, cfg in [
    ("correlated, rank 8", SynthConfig(500, 40, 40, rank=8, decay=0.5, noise=0.05, seed=1)),
    ("correlated, rank 30", SynthConfig(500, 40, 40, rank=30, decay=0.95, noise=0.05, seed=1)),
    ("noise dominated", SynthConfig(500, 40, 40, rank=2, decay=0.5, noise=2.0, seed=1)),
]:
    x, y = synthetic_matrices(cfg)
    a, b, delta = CoOccurringDirections(m, 40, 40).extend(zip_pair(x, y)).finalize()
    rep = oracle.bound_report(x, y, a, b, m, delta_sum=delta)
    ratio = rep.theorem1_rhs_min / rep.lemma2_rhs
    print(
        f"{label:<22}{rep.exact_spectral_error:>10.2f}{rep.lemma2_rhs:>10.2f}"
        f"{rep.theorem1_rhs_min:>10.2f}{ratio:>8.2f}"
    )
    best_k = int(np.argmin(rep.theorem1_rhs_per_k))
    print(f"{'':<22}best k = {best_k}, shrink mass = {delta:.2f}, diagnostics ok = "
          f"{rep.lemma3_check_i and rep.lemma3_check_ii and rep.lemma4_check}")
