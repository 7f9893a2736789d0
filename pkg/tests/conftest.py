import os
import sys

import pytest
from hypothesis import settings

sys.path.insert(0, os.path.dirname(__file__))

settings.register_profile("default", deadline=None, max_examples=25)
settings.load_profile("default")

_ACCEPTANCE = {}


@pytest.fixture
def record():
    """Record the outcome of an acceptance criterion for the end-of-run summary."""
    def _record(number, checks):
        _ACCEPTANCE[number] = checks
        return all(ok for _, ok in checks)
    return _record


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_ACCEPTANCE):
        checks = _ACCEPTANCE[number]
        ok = all(passed for _, passed in checks)
        failed = [label for label, passed in checks if not passed]
        tail = "" if ok else "  failed: " + "; ".join(failed)
        terminalreporter.write_line(f"criterion {number:2d}: {'PASS' if ok else 'FAIL'}{tail}")
