import csv
import io
import json

import numpy as np
import pytest

from coamm import cli, oracle
from coamm.cod import CoOccurringDirections
from coamm.baselines import FDAMM
from coamm.data_io import SynthConfig, read_matrix_market, synthetic_matrices, zip_pair

SYNTH = "n=300 dx=30 dy=25 rank=4 decay=0.8 noise=0.05 density=0.1 seed=3"


def run_cli(capsys, *argv):
    code = cli.main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def rows(text):
    return list(csv.DictReader(io.StringIO(text)))


def test_gen_writes_files_and_manifest(tmp_path, capsys):
    args = ["gen", "--n", "2000", "--dx", "200", "--dy", "200", "--rank", "10", "--decay", "0.8",
            "--density", "0.02", "--seed", "7"]
    assert run_cli(capsys, *args, "--out", str(tmp_path / "a"))[0] == 0
    assert run_cli(capsys, *args, "--out", str(tmp_path / "b"))[0] == 0
    for name in ("X.mtx", "Y.mtx", "manifest.json"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()
    man = json.loads((tmp_path / "a" / "manifest.json").read_text())
    assert man["seed"] == 7 and man["config"]["density"] == 0.02
    trials = 2000 * 200
    # a single binomial draw; this seed sits about 3.1 sigma low, so allow 4
    for side in ("density_x", "density_y"):
        assert abs(man[side] - 0.02) <= 4 * np.sqrt(0.02 * 0.98 / trials)
    x = read_matrix_market(tmp_path / "a" / "X.mtx")
    assert x.nnz == man["nnz_x"]


def test_gen_invalid_flags(tmp_path, capsys):
    code, _, err = run_cli(capsys, "gen", "--n", "10", "--dx", "3", "--dy", "3", "--rank", "5", "--out", str(tmp_path))
    assert code == 2 and "rank" in err
    with pytest.raises(SystemExit) as exc:
        cli.main(["gen", "--n", "ten"])
    assert exc.value.code == 2


def test_run_schema_and_formats(capsys):
    code, out, _ = run_cli(capsys, "run", "--algo", "cod", "--m", "8", "--synth", SYNTH)
    assert code == 0
    lines = out.strip().splitlines()
    assert lines[0].split(",") == cli.RUN_COLUMNS
    row = rows(out)[0]
    assert row["flush_count"] == "" and row["q"] == "" and row["epsilon_hat"] == ""
    assert "e" in row["rel_err"] and len(row["rel_err"].split("e")[0]) >= 17
    assert row["err_denominator"] == "frob_product"


def test_run_matches_library(capsys):
    x, y = synthetic_matrices(SynthConfig.from_text(SYNTH))
    a, b, delta = CoOccurringDirections(8, 30, 25).extend(zip_pair(x, y)).finalize()
    rel = oracle.amm_error(x, y, a, b) / oracle.frobenius_product(x, y)
    row = rows(run_cli(capsys, "run", "--algo", "cod", "--m", "8", "--synth", SYNTH)[1])[0]
    assert float(row["rel_err"]) == rel and float(row["delta_sum"]) == delta
    fa, fb = FDAMM(8, 30, 25).extend(zip_pair(x, y)).finalize()
    rel = oracle.amm_error(x, y, fa, fb) / oracle.frobenius_product(x, y)
    row = rows(run_cli(capsys, "run", "--algo", "fd-amm", "--m", "8", "--synth", SYNTH)[1])[0]
    assert float(row["rel_err"]) == rel and row["delta_sum"] == ""


def test_run_scod_exact_case_and_diagnostics(capsys):
    synth = "n=200 dx=20 dy=20 rank=3 decay=0.9 noise=0 density=1 seed=1"
    code, out, _ = run_cli(capsys, "run", "--algo", "scod", "--m", "8", "--synth", synth, "--diagnostics")
    row = rows(out)[0]
    assert code == 0 and float(row["rel_err"]) <= 1e-8
    assert int(row["flush_count"]) >= 1 and row["q"] == "5" and float(row["epsilon_hat"]) == 0.0


def test_run_from_files_and_synth_file(tmp_path, capsys):
    run_cli(capsys, "gen", "--n", "100", "--dx", "12", "--dy", "10", "--rank", "3", "--density", "0.3",
            "--out", str(tmp_path))
    code, out, _ = run_cli(capsys, "run", "--algo", "sfd-amm", "--m", "4",
                           "--x", str(tmp_path / "X.mtx"), "--y", str(tmp_path / "Y.mtx"))
    assert code == 0 and rows(out)[0]["n"] == "100"
    cfg = tmp_path / "cfg.txt"
    cfg.write_text("n=50\ndx=5\ndy=5\nrank=2\n")
    assert run_cli(capsys, "run", "--algo", "cod", "--m", "3", "--synth-file", str(cfg))[0] == 0


def test_run_errors(tmp_path, capsys):
    assert run_cli(capsys, "run", "--algo", "cod", "--m", "3")[0] == 2
    assert run_cli(capsys, "run", "--algo", "cod", "--m", "0", "--synth", SYNTH)[0] == 2
    assert run_cli(capsys, "run", "--algo", "cod", "--m", "3", "--synth", "n=oops")[0] == 2
    bad = tmp_path / "bad.mtx"
    bad.write_text("not a header\n")
    code, _, err = run_cli(capsys, "run", "--algo", "cod", "--m", "3", "--x", str(bad), "--y", str(bad))
    assert code == 2 and "line 1" in err
    code, _, err = run_cli(capsys, "run", "--algo", "cod", "--m", "2", "--synth", "n=5 dx=2100 dy=2100 rank=1")
    assert code == 3 and "guard" in err


def test_sweep_rows_and_monotone_cod(capsys, monkeypatch):
    monkeypatch.setenv("AMM_THREADS", "2")
    synth = "n=2000 dx=200 dy=200 rank=20 decay=0.9 noise=0.05 density=0.05 seed=11"
    code, out, _ = run_cli(capsys, "sweep", "--algos", "cod,scod", "--ms", "8,16,32", "--repeats", "2",
                           "--jobs", "4", "--synth", synth)
    assert code == 0
    table = rows(out)
    assert list(table[0]) == cli.SWEEP_COLUMNS
    assert len(table) == 2 * 3 * 2 and all(r["status"] == "ok" for r in table)
    cod = [float(r["rel_err"]) for r in table if r["algo"] == "cod" and r["repeat"] == "0"]
    assert all(b <= a for a, b in zip(cod, cod[1:]))
    scod_seeds = {r["seed"] for r in table if r["algo"] == "scod"}
    assert scod_seeds == {"0", "1"}


def test_sweep_reports_failed_cells(capsys, monkeypatch, caplog):
    def boom(spec, x, y, ingest_ms=0.0):
        if spec.algo == "scod":
            raise RuntimeError("kernel trouble")
        return real(spec, x, y, ingest_ms)

    real = cli.run_once
    monkeypatch.setattr(cli, "run_once", boom)
    code, out, _ = run_cli(capsys, "sweep", "--algos", "cod,scod", "--ms", "4", "--repeats", "1", "--synth", SYNTH)
    table = rows(out)
    assert code == 0 and [r["status"] for r in table] == ["ok", "error: RuntimeError: kernel trouble"]
    assert "1 of 2 sweep cells failed" in caplog.text


def test_sweep_usage_errors(capsys, monkeypatch):
    assert run_cli(capsys, "sweep", "--algos", "nope", "--synth", SYNTH)[0] == 2
    assert run_cli(capsys, "sweep", "--ms", "a,b", "--synth", SYNTH)[0] == 2
    monkeypatch.setenv("AMM_THREADS", "many")
    assert run_cli(capsys, "sweep", "--ms", "4", "--repeats", "1", "--synth", SYNTH)[0] == 2


def test_verify_quick(capsys, monkeypatch):
    code, out, _ = run_cli(capsys, "verify", "--scale", "quick")
    assert code == 0
    assert out.count("[PASS]") == 9 and "9/9 checks passed" in out


def test_verify_exit_code_on_failure(capsys, monkeypatch):
    from coamm import verify

    def fake(scale, perf, log):
        res = [verify.CriterionResult(1, "broken", False, "forced")]
        log(res[0].line())
        return res

    monkeypatch.setattr(verify, "run_all", fake)
    code, out, _ = run_cli(capsys, "verify")
    assert code == 1 and "[FAIL]" in out
