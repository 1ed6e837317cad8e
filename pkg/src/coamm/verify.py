"""Desk-scale verification of every error bound and property the sketches promise.

Each ``check_*`` function builds its own seeded instances, runs the sketches
against the dense oracle and returns one :class:`CriterionResult` per claim.
``run_all`` strings them together for the command line.
"""
from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from . import oracle
from .cod import CoOccurringDirections
from .data_io import SynthConfig, synthetic_matrices, zip_pair
from .fd import FrequentDirections
from .linalg import singular_values
from .scod import QSchedule, SparseCoOccurringDirections
from .spm import SpmConfig, balance_split, subspace_power_method

# slack for floating-point rounding on inequalities that are tight in exact arithmetic
FLOAT_RTOL = 1e-9


@dataclass
class CriterionResult:
    number: int
    name: str
    passed: bool
    detail: str = ""
    counts: dict = field(default_factory=dict)
    seconds: float = 0.0

    def line(self) -> str:
        tag = "PASS" if self.passed else "FAIL"
        counts = ", ".join(f"{k} {ok}/{tot}" for k, (ok, tot) in self.counts.items())
        extra = f" [{counts}]" if counts else ""
        return f"[{tag}] {self.number:>2}. {self.name}: {self.detail}{extra} ({self.seconds:.1f}s)"


class _Tally:
    def __init__(self):
        self.counts: dict[str, list[int]] = {}

    def add(self, key: str, ok: bool) -> bool:
        c = self.counts.setdefault(key, [0, 0])
        c[0] += bool(ok)
        c[1] += 1
        return ok

    def all_ok(self, *keys) -> bool:
        keys = keys or tuple(self.counts)
        return all(self.counts[k][0] == self.counts[k][1] for k in keys if k in self.counts)

    def as_dict(self) -> dict:
        return {k: tuple(v) for k, v in self.counts.items()}


def random_stream(rng: np.random.Generator, n: int, d: int) -> np.ndarray:
    """Dense test stream: iid Gaussian, low rank plus noise, or decaying spectrum."""
    kind = rng.integers(3)
    if kind == 0:
        return rng.standard_normal((n, d))
    if kind == 1:
        r = int(rng.integers(1, d + 1))
        return rng.standard_normal((n, r)) @ rng.standard_normal((r, d)) + 0.1 * rng.standard_normal((n, d))
    q = np.linalg.qr(rng.standard_normal((d, d)))[0]
    scales = float(rng.uniform(0.5, 0.95)) ** np.arange(d)
    return (rng.standard_normal((n, d)) * scales) @ q.T


def fd_bound_holds(x: np.ndarray, a: np.ndarray, m: int) -> bool:
    err = float(singular_values(x.T @ x - a.T @ a)[0])
    s = singular_values(x)
    slack = FLOAT_RTOL * float(np.sum(s**2))
    return all(err <= oracle.bound_lemma1(x, m, k, s) + slack for k in range(m))


def check_fd_bound(n_streams: int = 50, seed: int = 0) -> CriterionResult:
    t0 = time.perf_counter()
    rng = np.random.default_rng(seed)
    tally = _Tally()
    for i in range(n_streams):
        m = (4, 8, 16)[i % 3]
        n = int(rng.integers(20, 501))
        d = int(rng.integers(2, 41))
        x = random_stream(rng, n, d)
        a = FrequentDirections(m, d).extend(x).finalize()
        tally.add("fd bound", fd_bound_holds(x, a, m))
        gap = x.T @ x - a.T @ a
        min_eig = float(np.linalg.eigvalsh((gap + gap.T) / 2)[0])
        tally.add("psd", min_eig >= -1e-8 * float(np.sum(x**2)))
    secs = time.perf_counter() - t0
    ok = tally.all_ok() and secs < 60
    return CriterionResult(1, "FD error bound", ok, f"{n_streams} streams, zero violations required", tally.as_dict(), secs)


def _cod_run(x, y, m):
    a, b, delta = CoOccurringDirections(m, x.shape[1], y.shape[1]).extend(zip(x, y)).finalize()
    return a, b, delta


def check_cod_suite(n_general: int = 50, n_lowrank: int = 30, seed: int = 1) -> list[CriterionResult]:
    """Improved COD bound plus the shrink-mass diagnostics, on the same runs."""
    t0 = time.perf_counter()
    rng = np.random.default_rng(seed)
    t2, t3 = _Tally(), _Tally()
    ratios = []
    for i in range(n_general + n_lowrank):
        m = (4, 8, 16)[i % 3]
        n = int(rng.integers(50, 501))
        dx = int(rng.integers(max(m, 8), 41))
        dy = int(rng.integers(max(m, 8), 41))
        lowrank = i >= n_general
        if lowrank:
            cfg = SynthConfig(n, dx, dy, rank=m // 2, decay=0.5, noise=0.05, seed=10_000 + i)
        else:
            cfg = SynthConfig(
                n, dx, dy,
                rank=int(rng.integers(1, min(dx, dy) + 1)),
                decay=float(rng.uniform(0.5, 1.0)),
                noise=float(rng.uniform(0.0, 0.5)),
                seed=i,
            )
        xs, ys = synthetic_matrices(cfg)
        x, y = xs.toarray(), ys.toarray()
        a, b, delta = _cod_run(x, y, m)
        sigma = oracle.xty_spectrum(x, y)
        fp = oracle.frobenius_product(x, y)
        err = oracle.amm_error(x, y, a, b)
        per_k = oracle.theorem1_per_k(x, y, m, sigma)
        t2.add("improved bound all k", bool(np.all(err <= per_k + FLOAT_RTOL * fp)))
        t2.add("classic bound", err <= fp / m * (1 + FLOAT_RTOL))
        t2.add("improved min <= classic", per_k.min() <= fp / m * (1 + 1e-12))
        if lowrank:
            ratios.append(per_k.min() / (fp / m))
        ok_i, ok_ii = oracle.lemma3_checks(x, y, a, b, m, delta)
        t3.add("error <= shrink mass", ok_i)
        t3.add("nuclear <= frob - m*shrink", ok_ii)
        t3.add("nuclear gap", oracle.lemma4_check(x, y, a, b, m, delta))
    frac = float(np.mean(np.asarray(ratios) < 0.5)) if ratios else 1.0
    secs = time.perf_counter() - t0
    r2 = CriterionResult(
        2, "COD improved bound", t2.all_ok() and frac >= 0.8,
        f"tightening ratio < 0.5 on {frac:.0%} of low-rank pairs (need >= 80%)",
        t2.as_dict(), secs,
    )
    r3 = CriterionResult(3, "COD shrink-mass diagnostics", t3.all_ok(), "zero violations required", t3.as_dict(), secs)
    return [r2, r3]


def check_symmetric(n_streams: int = 20, seed: int = 2) -> CriterionResult:
    t0 = time.perf_counter()
    rng = np.random.default_rng(seed)
    tally = _Tally()
    worst = 0.0
    for i in range(n_streams):
        m = (4, 8, 16)[i % 3]
        n = int(rng.integers(50, 501))
        d = int(rng.integers(m + 1, 41))
        x = random_stream(rng, n, d)
        fa = FrequentDirections(m, d).extend(x).finalize()
        a, b, _ = _cod_run(x, x, m)
        g = fa.T @ fa
        rel = float(np.linalg.norm(a.T @ b - g) / max(np.linalg.norm(g), 1e-300))
        worst = max(worst, rel)
        tally.add("cod(x,x)=fd(x)", rel <= 1e-8)
        s = singular_values(x)
        sig = oracle.xty_spectrum(x, x)
        # both sides subtract a head sum from ||X||_F^2, so agreement is measured on that scale
        scale = float(np.sum(s**2))
        for k in range(m):
            l1 = oracle.bound_lemma1(x, m, k, s)
            t1 = oracle.bound_theorem1(x, x, m, k, sig)
            if not tally.add("improved(x,x) = fd bound(x)", abs(t1 - l1) <= 1e-12 * scale):
                break
    return CriterionResult(
        4, "Symmetric degeneration", tally.all_ok(), f"worst product mismatch {worst:.1e}",
        tally.as_dict(), time.perf_counter() - t0,
    )


def _random_sparse(rng, n, d, density):
    return sp.csr_array(sp.random(n, d, density=density, random_state=rng, data_rvs=rng.standard_normal))


def _low_rank_buffers(rng, m):
    n = int(rng.integers(1, 60))
    dx, dy = int(rng.integers(m + 1, 40)), int(rng.integers(m + 1, 40))
    r = int(rng.integers(1, m + 1))
    x = _random_sparse(rng, n, dx, 0.3).toarray()
    keep = rng.choice(dx, size=r, replace=False)
    mask = np.zeros(dx, dtype=bool)
    mask[keep] = True
    x[:, ~mask] = 0.0
    y = _random_sparse(rng, n, dy, 0.3).toarray()
    return sp.csr_array(x), sp.csr_array(y)


def epsilon_hat_sweep(qs=(1, 3, 5, 9), seed: int = 3) -> dict[int, float]:
    """Measured SPM excess on one fixed sparse stream for several q."""
    cfg = SynthConfig(600, 60, 60, rank=20, decay=0.95, noise=0.1, density=0.05, seed=seed)
    x, y = synthetic_matrices(cfg)
    out = {}
    for q in qs:
        s = SparseCoOccurringDirections(5, 60, 60, QSchedule.fixed(q), seed=seed, keep_flushes=True)
        s.extend(zip_pair(x, y)).finalize()
        out[q] = oracle.measure_epsilon_hat(s.flush_log, 5)
    return out


def check_spm(n_exact: int = 20, n_random: int = 100, seed: int = 4) -> CriterionResult:
    t0 = time.perf_counter()
    rng = np.random.default_rng(seed)
    tally = _Tally()
    for i in range(n_exact):
        m = int(rng.integers(1, 9))
        xb, yb = _low_rank_buffers(rng, m)
        mm = oracle.exact_product(xb, yb)
        z = subspace_power_method(xb, yb, SpmConfig(m, 5, seed=i))
        resid = float(singular_values(mm - z @ (z.T @ mm))[0]) if mm.size else 0.0
        tally.add("exact recovery", resid <= 1e-8 * np.linalg.norm(mm))
    good = 0
    for i in range(n_random):
        xb = _random_sparse(rng, 200, 50, 0.05)
        yb = _random_sparse(rng, 200, 50, 0.05)
        mm = oracle.exact_product(xb, yb)
        z = subspace_power_method(xb, yb, SpmConfig(5, 5, seed=1000 + i))
        good += oracle.projection_ratio(mm, z, 5) <= 1.5
    tally.counts["ratio <= 1.5"] = [good, n_random]
    eps = epsilon_hat_sweep()
    vals = [eps[q] for q in sorted(eps)]
    mono = all(b <= a + 1e-12 for a, b in zip(vals, vals[1:]))
    tally.add("eps_hat nonincreasing in q", mono)
    ok = tally.all_ok("exact recovery", "eps_hat nonincreasing in q") and good >= 0.95 * n_random
    detail = "eps_hat over q " + ", ".join(f"{q}:{e:.3g}" for q, e in sorted(eps.items()))
    return CriterionResult(5, "Subspace power method contract", ok, detail, tally.as_dict(), time.perf_counter() - t0)


def flush_checks(rec, tally: _Tally) -> None:
    """Frobenius shrink, balance and exact compressed-product identity of one flush."""
    bx, by = rec.buffer_frobenius
    tx, ty = rec.tilde_frobenius
    tally.add("frobenius shrink", tx * ty <= bx * by * (1 + FLOAT_RTOL) + 1e-300)
    if rec.x_tilde is None:
        return
    sx = singular_values(rec.x_tilde) ** 2
    sy = singular_values(rec.y_tilde) ** 2
    scale = max(float(sx[0]) if sx.size else 0.0, 1e-300)
    tally.add("balance", sx.shape == sy.shape and bool(np.all(np.abs(sx - sy) <= 1e-8 * scale)))
    target = rec.z @ (rec.z.T @ oracle.exact_product(rec.x_buf, rec.y_buf))
    got = rec.x_tilde.T @ rec.y_tilde
    tally.add("identity", np.linalg.norm(got - target) <= 1e-9 * max(np.linalg.norm(target), 1e-300))


def check_scod_suite(n_instances: int = 30, seed: int = 7) -> list[CriterionResult]:
    t0 = time.perf_counter()
    rng = np.random.default_rng(seed)
    t6, t7 = _Tally(), _Tally()
    ratios = []
    for i in range(n_instances):
        m = (8, 16)[i % 2]
        n = int(rng.integers(500, 2001))
        dx = int(rng.integers(50, 201))
        dy = int(rng.integers(50, 201))
        dens = float(rng.choice([0.01, 0.02, 0.05]))
        r = int(rng.integers(2, 21))
        cfg = SynthConfig(n, dx, dy, rank=r, decay=0.8, noise=0.05, density=dens, seed=100 + i)
        x, y = synthetic_matrices(cfg)
        s = SparseCoOccurringDirections(m, dx, dy, seed=i, keep_flushes=True)
        a, b, _, _ = s.extend(zip_pair(x, y)).finalize()
        for rec in s.flush_log:
            flush_checks(rec, t6)
        ca, cb, _ = CoOccurringDirections(m, dx, dy).extend(zip_pair(x, y)).finalize()
        sigma = oracle.xty_spectrum(x, y)
        eps = oracle.measure_epsilon_hat(s.flush_log, m)
        err = oracle.amm_error(x, y, a, b)
        fp = oracle.frobenius_product(x, y)
        t7.add(
            "sparse bound all k",
            all(err <= oracle.bound_theorem3(x, y, m, k, eps, sigma) + FLOAT_RTOL * fp for k in range(m)),
        )
        cod_err = oracle.amm_error(x, y, ca, cb)
        ratios.append(err / cod_err if cod_err > 0 else (1.0 if err == 0 else np.inf))
    frac = float(np.mean(np.asarray(ratios) <= 3.0))
    t7.counts["scod <= 3x cod"] = [int(round(frac * len(ratios))), len(ratios)]
    secs = time.perf_counter() - t0
    r6 = CriterionResult(6, "Flush compression identities", t6.all_ok(), "every flush of every run", t6.as_dict(), secs)
    r7 = CriterionResult(
        7, "SCOD end to end", t7.all_ok("sparse bound all k") and frac >= 0.9,
        f"median scod/cod error ratio {np.median(ratios):.3f}", t7.as_dict(), secs,
    )
    return [r6, r7]


def _time_sketch(make, x, y) -> float:
    stream = zip_pair(x, y)
    t = time.perf_counter()
    sk = make().extend(stream)
    sk.finalize()
    return time.perf_counter() - t


def check_performance(
    n: int = 50_000, d: int = 2000, m: int = 16, densities=(0.005, 0.01, 0.02, 0.04), repeats: int = 3
) -> CriterionResult:
    t0 = time.perf_counter()
    nnz, times = [], []
    cod_time = scod_base = None
    for dens in densities:
        x, y = synthetic_matrices(SynthConfig(n, d, d, rank=20, decay=0.9, noise=0.05, density=dens, seed=3))
        ts = float(np.median([_time_sketch(lambda: SparseCoOccurringDirections(m, d, d), x, y) for _ in range(repeats)]))
        nnz.append(x.nnz + y.nnz)
        times.append(ts)
        if dens == densities[0]:
            scod_base = ts
            cod_time = _time_sketch(lambda: CoOccurringDirections(m, d, d), x, y)
    slope = float(np.polyfit(np.log(nnz), np.log(times), 1)[0])
    speed = scod_base / cod_time
    secs = time.perf_counter() - t0
    ok = speed <= 0.5 and slope <= 1.2 and secs < 600
    detail = f"scod/cod time {speed:.3f} (need <= 0.5), log-log slope {slope:.2f} (need <= 1.2)"
    return CriterionResult(8, "Performance shape", ok, detail, {}, secs)


def check_monotonicity(ms=(8, 16, 32, 64), seeds=range(5)) -> CriterionResult:
    t0 = time.perf_counter()
    cfg = SynthConfig(2000, 200, 200, rank=20, decay=0.9, noise=0.05, density=0.05, seed=11)
    x, y = synthetic_matrices(cfg)
    fp = oracle.frobenius_product(x, y)
    cod, scod = [], []
    for m in ms:
        a, b, _ = CoOccurringDirections(m, 200, 200).extend(zip_pair(x, y)).finalize()
        cod.append(oracle.amm_error(x, y, a, b) / fp)
        errs = []
        for s in seeds:
            a, b, _, _ = SparseCoOccurringDirections(m, 200, 200, seed=s).extend(zip_pair(x, y)).finalize()
            errs.append(oracle.amm_error(x, y, a, b) / fp)
        scod.append(float(np.median(errs)))
    cod_ok = all(b <= a for a, b in zip(cod, cod[1:]))
    scod_ok = all(b <= a for a, b in zip(scod, scod[1:]))
    detail = "cod " + " ".join(f"{e:.4g}" for e in cod) + " | scod " + " ".join(f"{e:.4g}" for e in scod)
    return CriterionResult(
        9, "Error nonincreasing in m", cod_ok and scod_ok, detail,
        {"cod": (int(cod_ok), 1), "scod": (int(scod_ok), 1)}, time.perf_counter() - t0,
    )


def fd_adversarial_stream(m: int = 2, big: float = 2.0, n_small: int = 30) -> np.ndarray:
    """One large row followed by many small orthogonal ones.

    Without shrinking, every compaction discards the accumulated small
    direction, so the error approaches ``n_small`` while the k = m-1 bound
    stays at ``big**2``.
    """
    d = m
    x = np.zeros((1 + n_small, d))
    x[0, 1:] = big
    x[1:, 0] = 1.0
    return x


def cod_adversarial_stream() -> tuple[np.ndarray, np.ndarray]:
    """With m = 1, thresholding at the second singular value leaves one
    nonzero row that the next insertion overwrites, losing mass that the
    shrink accounting never sees."""
    x = np.array([[2.0, 0.0], [0.0, 1.0], [0.0, 1.0]])
    return x, x.copy()


def check_mutations() -> CriterionResult:
    t0 = time.perf_counter()
    tally = _Tally()
    m = 2
    x = fd_adversarial_stream(m)
    good = FrequentDirections(m, x.shape[1]).extend(x).finalize()
    bad = FrequentDirections(m, x.shape[1], shrink=False).extend(x).finalize()
    tally.add("fd correct passes", fd_bound_holds(x, good, m))
    tally.add("fd without shrink caught", not fd_bound_holds(x, bad, m))

    x, y = cod_adversarial_stream()
    results = {}
    for label, idx in (("correct", None), ("mutant", 2)):
        a, b, delta = CoOccurringDirections(1, 2, 2, delta_index=idx).extend(zip(x, y)).finalize()
        ok_i, ok_ii = oracle.lemma3_checks(x, y, a, b, 1, delta)
        results[label] = ok_i and ok_ii and oracle.lemma4_check(x, y, a, b, 1, delta)
    tally.add("cod correct passes", results["correct"])
    tally.add("cod wrong delta caught", not results["mutant"])
    return CriterionResult(10, "Mutation sensitivity", tally.all_ok(), "both mutants must fail", tally.as_dict(), time.perf_counter() - t0)


def run_all(scale: str = "full", perf: bool = True, log=print) -> list[CriterionResult]:
    """Run every check; ``scale='quick'`` shrinks instance counts for a fast smoke run."""
    quick = scale == "quick"
    steps = [
        lambda: [check_fd_bound(10 if quick else 50)],
        lambda: check_cod_suite(10 if quick else 50, 10 if quick else 30),
        lambda: [check_symmetric(5 if quick else 20)],
        lambda: [check_spm(5 if quick else 20, 20 if quick else 100)],
        lambda: check_scod_suite(6 if quick else 30),
        lambda: [check_performance(n=10_000 if quick else 50_000, repeats=1 if quick else 3)] if perf else [],
        lambda: [check_monotonicity(seeds=range(2) if quick else range(5))],
        lambda: [check_mutations()],
    ]
    out = []
    for step in steps:
        for res in step():
            out.append(res)
            if log is not None:
                log(res.line())
    return out
