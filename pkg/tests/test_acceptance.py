"""Acceptance criteria 1-10, one test each.

Every test prints its pass/fail line; the lines are repeated in the
terminal summary by conftest.py. Criterion 7 fails by design of the
published (U2) formula, see the decisions ledger.
"""

import json

import pytest

from hopfuq import acceptance

SUMMARY: list[str] = []


@pytest.mark.parametrize("number", [pytest.param(k, marks=pytest.mark.slow) if k in acceptance.ENSEMBLE_CRITERIA else k
                                    for k in sorted(acceptance.CRITERIA)])
def test_criterion(number):
    result = acceptance.CRITERIA[number]()
    line = result.line()
    SUMMARY.append(line)
    print(line)
    detail = json.dumps(result.details.get("sub_checks", result.details), default=str)[:1500]
    passed = result.passed
    assert passed, f"{line}\n{detail}"
