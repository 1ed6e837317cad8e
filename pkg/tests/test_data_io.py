import numpy as np
import pytest
import scipy.sparse as sp
from hypothesis import given
from hypothesis import strategies as st

from coamm.data_io import (
    MM_HEADER,
    AlignmentError,
    MatrixMarketError,
    StreamConsumedError,
    SynthConfig,
    check_table1_metadata,
    gen_synthetic_pair,
    open_pair,
    read_matrix_market,
    synthetic_matrices,
    write_matrix_market,
    zip_pair,
)


def write(tmp_path, body, name="m.mtx"):
    p = tmp_path / name
    p.write_text(body)
    return p


def test_minimal_file(tmp_path):
    m = read_matrix_market(write(tmp_path, f"{MM_HEADER}\n2 2 1\n1 1 3.0\n"))
    assert m.shape == (2, 2) and m.nnz == 1 and m[0, 0] == 3.0


def test_comments_blank_lines_and_zero_drop(tmp_path):
    body = f"{MM_HEADER}\n% a comment\n\n3 4 3\n1 2 1.5\n% mid comment\n3 4 0.0\n2 1 -2e-3\n"
    m, dropped = read_matrix_market(write(tmp_path, body), with_stats=True)
    assert dropped == 1 and m.nnz == 2
    assert m[0, 1] == 1.5 and m[1, 0] == -2e-3


@pytest.mark.parametrize(
    "body, line",
    [
        ("%%MatrixMarket matrix array real general\n1 1\n1.0\n", 1),
        (f"{MM_HEADER}\n2 2\n", 2),
        (f"{MM_HEADER}\n2 2 1\n3 1 1.0\n", 3),
        (f"{MM_HEADER}\n2 2 1\n1 0 1.0\n", 3),
        (f"{MM_HEADER}\n2 2 2\n1 1 1.0\n2 2 abc\n", 4),
        (f"{MM_HEADER}\n2 2 1\n1 1 nan\n", 3),
        (f"{MM_HEADER}\n2 2 1\n1.5 1 1.0\n", 3),
        (f"{MM_HEADER}\n2 x 1\n", 2),
    ],
)
def test_parse_errors_carry_line_numbers(tmp_path, body, line):
    with pytest.raises(MatrixMarketError) as exc:
        read_matrix_market(write(tmp_path, body))
    assert exc.value.line == line and f"line {line}" in str(exc.value)


def test_duplicates_and_counts_rejected(tmp_path):
    with pytest.raises(MatrixMarketError, match="duplicate"):
        read_matrix_market(write(tmp_path, f"{MM_HEADER}\n2 2 2\n1 1 1.0\n1 1 2.0\n"))
    with pytest.raises(MatrixMarketError, match="declares"):
        read_matrix_market(write(tmp_path, f"{MM_HEADER}\n2 2 2\n1 1 1.0\n"))
    with pytest.raises(MatrixMarketError, match="size line"):
        read_matrix_market(write(tmp_path, f"{MM_HEADER}\n% only comments\n"))


def test_large_dims_and_published_metadata(tmp_path):
    m = read_matrix_market(write(tmp_path, f"{MM_HEADER}\n150000 172000 1\n150000 172000 1.0\n"))
    assert m.shape == (150000, 172000)
    assert check_table1_metadata("JRC (EN-FR)", "x", *m.shape) == []
    assert check_table1_metadata("JRC (EN-FR)", "y", *m.shape) != []


def test_density_metadata_tolerance():
    n, d = 23200, 28000
    nnz = round(6.31e-4 * n * d)
    assert check_table1_metadata("APR (EN-FR)", "x", n, d, nnz) == []
    assert check_table1_metadata("APR (EN-FR)", "x", n, d, int(nnz * 1.09)) == []
    assert check_table1_metadata("APR (EN-FR)", "x", n, d, int(nnz * 1.2))
    with pytest.raises(KeyError):
        check_table1_metadata("nope", "x", 1, 1)


def test_write_read_roundtrip_exact(tmp_path, rng):
    a = sp.random(30, 20, density=0.1, random_state=rng, data_rvs=rng.standard_normal) * 1e-7
    p = tmp_path / "rt.mtx"
    write_matrix_market(p, a, comment="two\nlines")
    b = read_matrix_market(p)
    assert (sp.csr_array(a) != b).nnz == 0


def test_synth_config_validation_and_text():
    with pytest.raises(ValueError):
        SynthConfig(10, 3, 4, rank=5)
    with pytest.raises(ValueError):
        SynthConfig(10, 3, 4, rank=2, density=0.0)
    with pytest.raises(ValueError):
        SynthConfig(10, 3, 4, rank=2, decay=1.5)
    cfg = SynthConfig.from_text("n=10, dx=3 dy=4\n# comment\nrank=2 density=0.5 seed=9")
    assert cfg == SynthConfig(10, 3, 4, rank=2, density=0.5, seed=9)
    assert SynthConfig.from_text(cfg.to_text()) == cfg
    with pytest.raises(ValueError):
        SynthConfig.from_text("n=10 bogus=1")
    with pytest.raises(ValueError):
        SynthConfig.from_text("n=10 dx")


def test_rank_one_noiseless_product():
    x, y = synthetic_matrices(SynthConfig(50, 6, 5, rank=1, noise=0.0, density=1.0, seed=1))
    s = np.linalg.svd((x.T @ y).toarray(), compute_uv=False)
    assert s[1] <= 1e-12 * s[0]


def test_determinism():
    cfg = SynthConfig(300, 20, 10, rank=3, noise=0.1, density=0.2, seed=4)
    x1, y1 = synthetic_matrices(cfg)
    x2, y2 = synthetic_matrices(cfg)
    assert (x1 != x2).nnz == 0 and (y1 != y2).nnz == 0
    rows1 = [(a.toarray(), b.toarray()) for a, b in gen_synthetic_pair(cfg)]
    np.testing.assert_array_equal(np.vstack([r[0] for r in rows1]), x1.toarray())


def test_expected_nnz_binomial():
    n, d, rho = 400, 50, 0.03
    total = 0
    for seed in range(10):
        x, _ = synthetic_matrices(SynthConfig(n, d, d, rank=4, noise=0.1, density=rho, seed=seed))
        total += x.nnz
    trials = 10 * n * d
    assert abs(total - rho * trials) <= 3 * np.sqrt(trials * rho * (1 - rho))


def test_unbiased_sparsification():
    dense = synthetic_matrices(SynthConfig(4000, 3, 3, rank=1, decay=1.0, noise=0.0, seed=0))[0]
    sparse = synthetic_matrices(SynthConfig(4000, 3, 3, rank=1, decay=1.0, noise=0.0, density=0.5, seed=0))[0]
    # scaling by 1/density keeps the second moment matched in expectation up to the 1/rho factor
    ratio = (sparse.multiply(sparse)).sum() / (dense.multiply(dense)).sum()
    assert 1.6 < ratio < 2.4


def test_zip_pair_alignment_and_single_pass(rng):
    x = sp.csr_array(rng.standard_normal((5, 3)))
    y = sp.csr_array(rng.standard_normal((5, 2)))
    s = zip_pair(x, y)
    assert len(s) == 5 and (s.dx, s.dy) == (3, 2)
    rows = list(s)
    np.testing.assert_array_equal(np.vstack([r.toarray() for r, _ in rows]), x.toarray())
    np.testing.assert_array_equal(np.vstack([r.toarray() for _, r in rows]), y.toarray())
    with pytest.raises(StreamConsumedError):
        list(s)
    with pytest.raises(AlignmentError):
        zip_pair(x, y[:4])


def test_open_pair(tmp_path, rng):
    x = sp.random(6, 4, density=0.5, random_state=rng)
    y = sp.random(6, 3, density=0.5, random_state=rng)
    write_matrix_market(tmp_path / "x.mtx", x)
    write_matrix_market(tmp_path / "y.mtx", y)
    s = open_pair(tmp_path / "x.mtx", tmp_path / "y.mtx")
    assert s.n == 6 and s.nnz_x == x.nnz and s.nnz_y == y.nnz


@given(st.integers(1, 40), st.integers(1, 8), st.floats(0.05, 1.0), st.integers(0, 1000))
def test_synthetic_shapes(n, d, rho, seed):
    x, y = synthetic_matrices(SynthConfig(n, d, d + 1, rank=1, noise=0.1, density=rho, seed=seed))
    assert x.shape == (n, d) and y.shape == (n, d + 1)
    assert np.all(x.data != 0) and np.all(np.isfinite(x.data))
