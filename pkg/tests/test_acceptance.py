"""Acceptance suite: one test and one printed PASS/FAIL line per criterion.

Run alone with ``pytest tests/test_acceptance.py -v`` or as a script with
``python3 tests/test_acceptance.py``.
"""
import sys

import pytest

from sddpde.certify import CRITERIA, run_criterion


@pytest.mark.parametrize("number", sorted(CRITERIA))
def test_criterion(number, capsys):
    res = run_criterion(number, seed=42)
    with capsys.disabled():
        print("\n" + res.line())
    assert res.passed, res.summary


if __name__ == "__main__":
    failed = 0
    for k in sorted(CRITERIA):
        res = run_criterion(k, seed=42)
        print(res.line(), flush=True)
        failed += not res.passed
    sys.exit(1 if failed else 0)
