"""Command line harness: generate inputs, run sketches, sweep grids, verify bounds.

Every subcommand writes CSV or summaries to stdout and logs to stderr.
Exit codes: 0 success, 1 verification failure, 2 usage or parse error,
3 dense-oracle guard exceeded.
"""
from __future__ import annotations

import argparse
import csv
import json
import logging
import os
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from . import oracle
from .baselines import FDAMM, SFDAMM
from .cod import CoOccurringDirections
from .data_io import (
    MatrixMarketError,
    SynthConfig,
    read_matrix_market,
    synthetic_matrices,
    write_matrix_market,
    zip_pair,
)
from .scod import QSchedule, SparseCoOccurringDirections

log = logging.getLogger("coamm")

ALGOS = ("fd-amm", "cod", "sfd-amm", "scod")
RANDOMIZED = ("sfd-amm", "scod")

RUN_COLUMNS = [
    "algo", "m", "q", "n", "dx", "dy", "nnz_x", "nnz_y",
    "time_ms_total", "time_ms_sketch", "rel_err", "abs_err", "err_denominator",
    "lemma2_rhs", "theorem1_rhs_min", "delta_sum", "flush_count", "epsilon_hat", "seed",
]
SWEEP_COLUMNS = RUN_COLUMNS + ["repeat", "time_ms_sketch_median", "status"]

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_GUARD = 0, 1, 2, 3


class UsageError(Exception):
    pass


@dataclass(frozen=True)
class RunSpec:
    algo: str
    m: int
    q: int = 5
    seed: int = 0
    error_mode: str = "dense"
    denominator: str = "frob_product"
    diagnostics: bool = False

    def __post_init__(self):
        if self.algo not in ALGOS:
            raise UsageError(f"unknown algo {self.algo!r}; choose from {', '.join(ALGOS)}")
        if self.m < 1:
            raise UsageError("m must be >= 1")
        if self.q < 1:
            raise UsageError("q must be >= 1")


def fmt(v) -> str:
    """Full-precision scientific notation for floats, plain digits for ints, empty for None."""
    if v is None:
        return ""
    if isinstance(v, str):
        return v
    if isinstance(v, (bool, np.bool_)):
        return str(bool(v)).lower()
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return f"{float(v):.16e}"


def _sketch(spec: RunSpec, x, y):
    """Run one algorithm over the aligned stream; returns (A, B, delta_sum, flush_count, flush_log)."""
    dx, dy = x.shape[1], y.shape[1]
    stream = zip_pair(x, y)
    if spec.algo == "cod":
        a, b, delta = CoOccurringDirections(spec.m, dx, dy).extend(stream).finalize()
        return a, b, delta, None, None
    if spec.algo == "fd-amm":
        a, b = FDAMM(spec.m, dx, dy).extend(stream).finalize()
        return a, b, None, None, None
    sched = QSchedule.fixed(spec.q)
    if spec.algo == "scod":
        s = SparseCoOccurringDirections(spec.m, dx, dy, sched, spec.seed, keep_flushes=spec.diagnostics)
        a, b, delta, flushes = s.extend(stream).finalize()
        return a, b, delta, flushes, s.flush_log
    s = SFDAMM(spec.m, dx, dy, sched, spec.seed, keep_flushes=spec.diagnostics)
    a, b = s.extend(stream).finalize()
    return a, b, s.delta_sum, s.flush_count, s.inner.flush_log


def run_once(spec: RunSpec, x, y, ingest_ms: float = 0.0) -> dict:
    """Sketch and evaluate one configuration; returns a row keyed by ``RUN_COLUMNS``."""
    t0 = time.perf_counter()
    a, b, delta, flushes, flush_log = _sketch(spec, x, y)
    sketch_ms = 1e3 * (time.perf_counter() - t0)
    # the shrink-mass diagnostics only describe the cross product for the two-sided sketches
    own_delta = delta if spec.algo in ("cod", "scod") else None
    rep = oracle.bound_report(
        x, y, a, b, spec.m,
        delta_sum=own_delta,
        error_mode=spec.error_mode,
        denominator=spec.denominator,
    )
    eps = None
    if spec.diagnostics and flush_log is not None and x.shape[1] * y.shape[1] <= oracle.DENSE_GUARD:
        eps = oracle.measure_epsilon_hat(flush_log, spec.m)
    return {
        "algo": spec.algo,
        "m": spec.m,
        "q": spec.q if spec.algo in RANDOMIZED else None,
        "n": x.shape[0],
        "dx": x.shape[1],
        "dy": y.shape[1],
        "nnz_x": x.nnz,
        "nnz_y": y.nnz,
        "time_ms_total": ingest_ms + sketch_ms,
        "time_ms_sketch": sketch_ms,
        "rel_err": rep.relative_error,
        "abs_err": rep.exact_spectral_error,
        "err_denominator": rep.rel_error_denominator,
        "lemma2_rhs": rep.lemma2_rhs,
        "theorem1_rhs_min": rep.theorem1_rhs_min,
        "delta_sum": delta,
        "flush_count": flushes,
        "epsilon_hat": eps,
        "seed": spec.seed,
    }


def _load_inputs(args):
    """Matrices from Matrix Market files or a synthetic config; returns (x, y, ms)."""
    t0 = time.perf_counter()
    sources = sum(v is not None for v in (args.x, args.synth, args.synth_file))
    if args.x is not None and args.y is None or args.y is not None and args.x is None:
        raise UsageError("--x and --y must be given together")
    if sources != 1:
        raise UsageError("give exactly one input: --x/--y, --synth or --synth-file")
    if args.x is not None:
        x = read_matrix_market(args.x)
        y = read_matrix_market(args.y)
        if x.shape[0] != y.shape[0]:
            raise UsageError(f"row counts differ: {x.shape[0]} vs {y.shape[0]}")
    else:
        text = args.synth if args.synth is not None else Path(args.synth_file).read_text()
        x, y = synthetic_matrices(SynthConfig.from_text(text))
    return x, y, 1e3 * (time.perf_counter() - t0)


def _writer(out):
    w = csv.writer(out, lineterminator="\n")
    return w


def cmd_gen(args) -> int:
    cfg = SynthConfig(args.n, args.dx, args.dy, args.rank, args.decay, args.noise, args.density, args.seed)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    x, y = synthetic_matrices(cfg)
    comment = "synthetic pair: " + " ".join(cfg.to_text().splitlines())
    write_matrix_market(out / "X.mtx", x, comment)
    write_matrix_market(out / "Y.mtx", y, comment)
    manifest = {
        "config": asdict(cfg),
        "seed": cfg.seed,
        "files": {"x": "X.mtx", "y": "Y.mtx"},
        "nnz_x": int(x.nnz),
        "nnz_y": int(y.nnz),
        "density_x": x.nnz / (cfg.n * cfg.dx),
        "density_y": y.nnz / (cfg.n * cfg.dy),
    }
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2) + "\n")
    log.info("wrote %s (nnz %d + %d)", out, x.nnz, y.nnz)
    return EXIT_OK


def _spec_from(args, algo: str, m: int, seed: int) -> RunSpec:
    return RunSpec(
        algo=algo, m=m, q=args.q, seed=seed,
        error_mode=args.error_mode, denominator=args.denominator, diagnostics=args.diagnostics,
    )


def cmd_run(args) -> int:
    spec = _spec_from(args, args.algo, args.m, args.seed)
    x, y, ingest_ms = _load_inputs(args)
    row = run_once(spec, x, y, ingest_ms)
    w = _writer(sys.stdout)
    w.writerow(RUN_COLUMNS)
    w.writerow([fmt(row[c]) for c in RUN_COLUMNS])
    return EXIT_OK


def _int_list(text: str) -> list[int]:
    try:
        vals = [int(t) for t in text.replace(",", " ").split()]
    except ValueError:
        raise UsageError(f"expected a list of integers, got {text!r}") from None
    if not vals:
        raise UsageError("empty list")
    return vals


def _thread_cap(requested: int) -> int:
    cap = os.environ.get("AMM_THREADS")
    if cap is not None:
        try:
            requested = min(requested, max(1, int(cap)))
        except ValueError:
            raise UsageError(f"AMM_THREADS must be an integer, got {cap!r}") from None
    return max(1, requested)


def cmd_sweep(args) -> int:
    algos = [a.strip() for a in args.algos.split(",") if a.strip()]
    ms = _int_list(args.ms)
    if not algos or args.repeats < 1:
        raise UsageError("sweep needs at least one algo and repeats >= 1")
    for a in algos:
        if a not in ALGOS:
            raise UsageError(f"unknown algo {a!r}")
    x, y, ingest_ms = _load_inputs(args)
    cells = [
        (algo, m, r, _spec_from(args, algo, m, args.seed + r if algo in RANDOMIZED else args.seed))
        for algo in algos for m in ms for r in range(args.repeats)
    ]

    def work(cell):
        algo, m, r, spec = cell
        try:
            row = run_once(spec, x, y, ingest_ms)
            row["status"] = "ok"
        except oracle.OracleGuardError as exc:
            row = {"algo": algo, "m": m, "seed": spec.seed, "status": f"guard: {exc}"}
        except Exception as exc:  # reported per row, the sweep carries on
            log.warning("%s m=%d repeat %d failed: %s", algo, m, r, exc)
            row = {"algo": algo, "m": m, "seed": spec.seed, "status": f"error: {type(exc).__name__}: {exc}"}
        row["repeat"] = r
        return row

    jobs = _thread_cap(args.jobs)
    if jobs == 1:
        rows = [work(c) for c in cells]
    else:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            rows = list(pool.map(work, cells))

    medians = {}
    for row in rows:
        if row.get("status") == "ok":
            medians.setdefault((row["algo"], row["m"]), []).append(row["time_ms_sketch"])
    w = _writer(sys.stdout)
    w.writerow(SWEEP_COLUMNS)
    for row in rows:
        t = medians.get((row["algo"], row["m"]))
        row["time_ms_sketch_median"] = float(np.median(t)) if t else None
        w.writerow([fmt(row.get(c)) for c in SWEEP_COLUMNS])
    failed = sum(r["status"] != "ok" for r in rows)
    if failed:
        log.warning("%d of %d sweep cells failed", failed, len(rows))
    return EXIT_OK


def cmd_verify(args) -> int:
    from .verify import run_all

    results = run_all(scale=args.scale, perf=args.perf, log=lambda s: print(s, flush=True))
    failed = [r for r in results if not r.passed]
    print(f"{len(results) - len(failed)}/{len(results)} checks passed")
    return EXIT_FAIL if failed else EXIT_OK


def _add_input_args(p):
    g = p.add_argument_group("input (pick one)")
    g.add_argument("--x", help="Matrix Market file for X")
    g.add_argument("--y", help="Matrix Market file for Y")
    g.add_argument("--synth", help='synthetic config as key=value text, e.g. "n=2000 dx=200 dy=200 density=0.02"')
    g.add_argument("--synth-file", help="file holding a key=value synthetic config")


def _add_eval_args(p):
    p.add_argument("--q", type=int, default=5, help="power iterations per flush (scod, sfd-amm)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--error-mode", choices=("dense", "implicit"), default="dense")
    p.add_argument("--denominator", choices=("frob_product", "exact_spectral"), default="frob_product")
    p.add_argument("--diagnostics", action="store_true", help="retain flushes and report epsilon_hat")


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="coamm", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen", help="write a synthetic pair as Matrix Market files")
    g.add_argument("--n", type=int, required=True)
    g.add_argument("--dx", type=int, required=True)
    g.add_argument("--dy", type=int, required=True)
    g.add_argument("--rank", type=int, default=10)
    g.add_argument("--decay", type=float, default=0.8)
    g.add_argument("--noise", type=float, default=0.0)
    g.add_argument("--density", type=float, default=1.0)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--out", default=".", help="output directory")
    g.set_defaults(func=cmd_gen)

    r = sub.add_parser("run", help="sketch one input and print a CSV row")
    r.add_argument("--algo", required=True, choices=ALGOS)
    r.add_argument("--m", type=int, required=True)
    _add_input_args(r)
    _add_eval_args(r)
    r.set_defaults(func=cmd_run)

    s = sub.add_parser("sweep", help="grid of algorithms x sketch sizes x repeats")
    s.add_argument("--algos", default="cod,scod", help="comma separated")
    s.add_argument("--ms", default="8,16,32", help="comma separated sketch sizes")
    s.add_argument("--repeats", type=int, default=3)
    s.add_argument("--jobs", type=int, default=1, help="concurrent cells (capped by AMM_THREADS)")
    _add_input_args(s)
    _add_eval_args(s)
    s.set_defaults(func=cmd_sweep)

    v = sub.add_parser("verify", help="run the bound and property suite")
    v.add_argument("--scale", choices=("quick", "full"), default="full")
    v.add_argument("--perf", action="store_true", help="include the large timing benchmark")
    v.set_defaults(func=cmd_verify)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(message)s",
        stream=sys.stderr,
    )
    try:
        return args.func(args)
    except oracle.OracleGuardError as exc:
        print(f"coamm: {exc}", file=sys.stderr)
        return EXIT_GUARD
    except (UsageError, MatrixMarketError, ValueError, OSError) as exc:
        print(f"coamm: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
