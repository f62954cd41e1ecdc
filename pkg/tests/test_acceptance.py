"""Acceptance suite: one test and one PASS/FAIL line per criterion."""

import pytest

from multislice_lab import verify

CRITERIA = [
    (1, "spectral insensitivity", "spectral"),
    (2, "exact log-Sobolev constants", "lsc-exact"),
    (3, "main interval sandwich", "sandwich"),
    (4, "modified log-Sobolev interval", "mls-interval"),
    (5, "chain rule and weighted split", "chain-rule"),
    (6, "coarsening transfer", "coarsening"),
    (7, "small-set expansion", "isoperimetry"),
    (8, "recursion closure", "recursion"),
    (9, "graph insensitivity of the gap", "aldous"),
    (10, "comparison constant", "comparison"),
    (11, "mixing sanity", "mixing"),
]


@pytest.mark.parametrize("number, title, check", CRITERIA, ids=[c[2] for c in CRITERIA])
def test_criterion(number, title, check, capsys):
    (result,) = verify.run_checks([check])
    with capsys.disabled():
        status = "PASS" if result.passed else "FAIL"
        print(f"\n[{status}] criterion {number:>2} ({title}): {result.summary} [{result.seconds:.1f}s]")
    assert result.passed, result.failures[:5]
