import numpy as np
import pytest
import scipy.sparse as sp
from hypothesis import given
from hypothesis import strategies as st

from coamm import oracle
from coamm.linalg import DimensionError, singular_values
from coamm.spm import SpmConfig, balance_split, compressed_product, subspace_power_method


def csr(a):
    return sp.csr_array(np.asarray(a, dtype=float))


def random_buffers(seed, n=200, dx=50, dy=50, density=0.05):
    rng = np.random.default_rng(seed)

    def one(d):
        return sp.csr_array(sp.random(n, d, density=density, random_state=rng, data_rvs=rng.standard_normal))

    return one(dx), one(dy)


def test_config_validation():
    with pytest.raises(ValueError):
        SpmConfig(0)
    with pytest.raises(ValueError):
        SpmConfig(2, power_iterations=0)


def test_rank_one_recovery():
    x, y = csr([[1.0, 0.0]]), csr([[2.0, 0.0]])
    z = subspace_power_method(x, y, SpmConfig(2))
    assert z.shape == (2, 1)
    np.testing.assert_allclose(np.abs(z[:, 0]), [1.0, 0.0])
    mm = oracle.exact_product(x, y)
    np.testing.assert_allclose(z @ z.T @ mm, mm)


@given(st.integers(0, 2**31 - 1), st.integers(1, 6))
def test_low_rank_recovered_exactly(seed, m):
    rng = np.random.default_rng(seed)
    r = int(rng.integers(1, m + 1))
    n = int(rng.integers(r, 40))
    x = rng.standard_normal((n, r)) @ rng.standard_normal((r, 15))
    y = rng.standard_normal((n, 12))
    mm = x.T @ y
    z = subspace_power_method(csr(x), csr(y), SpmConfig(m, 3, seed=seed))
    assert np.linalg.norm(mm - z @ (z.T @ mm), 2) <= 1e-8 * np.linalg.norm(mm)
    np.testing.assert_allclose(z.T @ z, np.eye(z.shape[1]), atol=1e-10)


def test_random_buffers_near_optimal():
    good = 0
    for seed in range(20):
        x, y = random_buffers(seed)
        z = subspace_power_method(x, y, SpmConfig(5, 5, seed=seed))
        good += oracle.projection_ratio(oracle.exact_product(x, y), z, 5) <= 1.5
    assert good >= 19


def test_deterministic_projector():
    x, y = random_buffers(3)
    z1 = subspace_power_method(x, y, SpmConfig(5, 5, seed=9))
    z2 = subspace_power_method(x, y, SpmConfig(5, 5, seed=9))
    np.testing.assert_array_equal(z1 @ z1.T, z2 @ z2.T)


def test_without_reorthonormalization_same_span_when_well_conditioned():
    x, y = random_buffers(4, n=100, dx=20, dy=20, density=0.2)
    z1 = subspace_power_method(x, y, SpmConfig(3, 2, seed=1))
    z2 = subspace_power_method(x, y, SpmConfig(3, 2, seed=1, reorthonormalize=False))
    assert np.abs(z1 @ z1.T - z2 @ z2.T).max() < 1e-6


def test_empty_and_misaligned_buffers():
    z = subspace_power_method(sp.csr_array((0, 4)), sp.csr_array((0, 3)), SpmConfig(2))
    assert z.shape == (4, 0)
    with pytest.raises(DimensionError):
        subspace_power_method(csr(np.ones((2, 3))), csr(np.ones((3, 3))), SpmConfig(2))


def test_balance_split_hand_example():
    x, y = csr([[1.0, 0.0]]), csr([[2.0, 0.0]])
    xt, yt = balance_split(np.array([[1.0], [0.0]]), x, y)
    np.testing.assert_allclose(np.abs(xt), [[np.sqrt(2), 0.0]])
    np.testing.assert_allclose(np.abs(yt), [[np.sqrt(2), 0.0]])
    np.testing.assert_allclose(xt.T @ yt, [[2.0, 0.0], [0.0, 0.0]])


def test_balance_split_zero_side():
    x, y = csr([[1.0, 2.0]]), sp.csr_array((1, 3))
    z = np.eye(2)[:, :1]
    xt, yt = balance_split(z, x, y)
    assert xt.shape == (0, 2) and yt.shape == (0, 3)


def test_compressed_product_shape_check():
    with pytest.raises(DimensionError):
        compressed_product(np.ones((3, 1)), csr(np.ones((2, 2))), csr(np.ones((2, 2))))


@given(st.integers(0, 2**31 - 1), st.integers(1, 8), st.integers(1, 6))
def test_split_identities(seed, m, q):
    x, y = random_buffers(seed, n=60, dx=20, dy=15, density=0.15)
    z = subspace_power_method(x, y, SpmConfig(m, q, seed=seed))
    xt, yt = balance_split(z, x, y)
    target = z @ (z.T @ oracle.exact_product(x, y))
    assert np.linalg.norm(xt.T @ yt - target) <= 1e-9 * max(np.linalg.norm(target), 1e-300)
    sx, sy = singular_values(xt) ** 2, singular_values(yt) ** 2
    if sx.size:
        assert np.all(np.abs(sx - sy) <= 1e-8 * sx[0])
        np.testing.assert_allclose(sx, singular_values(xt.T @ yt)[: sx.size], rtol=1e-8)
    assert np.linalg.norm(xt) * np.linalg.norm(yt) <= oracle.frobenius_product(x, y) * (1 + 1e-9)
