"""Acceptance criteria A1-A7; each test prints one pass/fail line."""

import pytest

from eqindex.acceptance import CRITERIA, algebra_property_suite, run_criterion


@pytest.mark.parametrize("code", list(CRITERIA))
def test_criterion(code, capsys):
    res = run_criterion(code)
    with capsys.disabled():
        print(f"\n{res.line()}")
    assert res.passed, res.detail


def test_property_suite_is_seeded():
    assert algebra_property_suite(50, seed=7) == algebra_property_suite(50, seed=7)
