"""Acceptance suite: one test per criterion at its stated tolerance.

Each test prints a ``[PASS]``/``[FAIL]`` line; the lines are repeated in the
pytest terminal summary. Run directly (``python tests/test_acceptance.py``)
for the same lines without pytest.
"""
import sys

import pytest

from coamm import verify

RESULTS: list[str] = []


def record(res: verify.CriterionResult) -> verify.CriterionResult:
    line = res.line()
    RESULTS.append(line)
    print(line)
    return res


@pytest.fixture(scope="module")
def cod_suite():
    return verify.check_cod_suite()


@pytest.fixture(scope="module")
def scod_suite():
    return verify.check_scod_suite()


def test_criterion_01_fd_bound():
    assert record(verify.check_fd_bound(50)).passed


def test_criterion_02_cod_improved_bound(cod_suite):
    assert record(cod_suite[0]).passed


def test_criterion_03_shrink_mass_diagnostics(cod_suite):
    assert record(cod_suite[1]).passed


def test_criterion_04_symmetric_degeneration():
    assert record(verify.check_symmetric(20)).passed


def test_criterion_05_power_method():
    assert record(verify.check_spm(20, 100)).passed


def test_criterion_06_flush_identities(scod_suite):
    assert record(scod_suite[0]).passed


def test_criterion_07_scod_end_to_end(scod_suite):
    assert record(scod_suite[1]).passed


def test_criterion_08_performance_shape():
    assert record(verify.check_performance()).passed


def test_criterion_09_error_nonincreasing_in_m():
    assert record(verify.check_monotonicity()).passed


def test_criterion_10_mutation_sensitivity():
    assert record(verify.check_mutations()).passed


if __name__ == "__main__":
    results = verify.run_all(scale="full", perf=True)
    sys.exit(0 if all(r.passed for r in results) else 1)
