"""Pytest plumbing: end-of-run report for the acceptance criteria."""

from __future__ import annotations

import pytest

_CRITERIA = pytest.StashKey[dict]()


@pytest.fixture
def record_criterion(request):
    """Record one acceptance criterion's outcome for the terminal summary."""
    registry = request.config.stash.setdefault(_CRITERIA, {})

    def _record(number: int, passed: bool, detail: str) -> None:
        registry[number] = (bool(passed), detail)
        print(f"criterion {number}: {'PASS' if passed else 'FAIL'} - {detail}")

    return _record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    registry = config.stash.get(_CRITERIA, None)
    if not registry:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(registry):
        passed, detail = registry[number]
        word = "PASS" if passed else "FAIL"
        terminalreporter.write_line(f"criterion {number}: {word} - {detail}")
