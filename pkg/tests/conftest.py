"""Shared fixtures and the acceptance summary printed at the end of a run."""

from __future__ import annotations

import pytest

from gofbt.critical_values import NullCache

#: filled by tests/test_acceptance.py: criterion id -> (title, passed, detail)
ACCEPTANCE_RESULTS: dict = {}


@pytest.fixture(scope="session")
def null_cache(tmp_path_factory):
    """One on-disk cache per session so each null law is simulated once."""
    return NullCache(tmp_path_factory.mktemp("nulls"))


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for cid in sorted(ACCEPTANCE_RESULTS):
        title, passed, detail = ACCEPTANCE_RESULTS[cid]
        terminalreporter.write_line(f"{'PASS' if passed else 'FAIL'}  C{cid:<2d} {title}: {detail}")
