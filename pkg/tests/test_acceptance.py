"""One test per acceptance criterion; each prints a single PASS/FAIL line.

Run with ``pytest -s tests/test_acceptance.py`` to see the lines.
"""
import json

import pytest

from rtflab.acceptance import RUNNERS, run_criterion


@pytest.mark.parametrize("index", range(1, len(RUNNERS) + 1), ids=[name.split()[0] for name, _ in RUNNERS])
def test_criterion(index):
    res = run_criterion(index)
    print("\n" + res.line())
    assert res.passed, json.dumps(res.detail, indent=2, sort_keys=True, default=str)
