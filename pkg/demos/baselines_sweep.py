"""Error against sketch size for all four sketches, the way the CLI sweep reports it.

Equivalent command line:
    coamm sweep --algos fd-amm,cod,sfd-amm,scod --ms 4,8,16,32 --repeats 1 \
        --synth "n=3000 dx=150 dy=120 rank=15 decay=0.85 noise=0.05 density=0.03 seed=2"

Run: python demos/baselines_sweep.py
"""
from coamm.cli import RunSpec, run_once
from coamm.data_io import SynthConfig, synthetic_matrices

x, y = synthetic_matrices(SynthConfig(3000, 150, 120, rank=15, decay=0.85, noise=0.05, density=0.03, seed=2))
algos = ("fd-amm", "cod", "sfd-amm", "scod")
print(f"{'m':>4}" + "".join(f"{a:>12}" for a in algos))
for m in (4, 8, 16, 32):
    errs = [run_once(RunSpec(a, m), x, y)["rel_err"] for a in algos]
    print(f"{m:>4}" + "".join(f"{e:>12.5f}" for e in errs))
print("\nsketch time (ms) at m = 16")
for a in algos:
    print(f"  {a:<8}{run_once(RunSpec(a, 16), x, y)['time_ms_sketch']:8.1f}")
