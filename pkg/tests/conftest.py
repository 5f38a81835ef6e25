import re
import sys

import pytest

from bverify.fields import get_field

FAST_FIELDS = ("zero", "abc:1,1,1", "rotation", "spheromak")


@pytest.fixture(scope="session")
def abc():
    return get_field("abc:1,1,1")


@pytest.fixture(scope="session")
def spheromak():
    return get_field("spheromak")


@pytest.fixture(scope="session")
def rotation():
    return get_field("rotation")


@pytest.fixture(scope="session")
def zero():
    return get_field("zero")



_ACCEPTANCE = re.compile(r"test_criterion_(\d+)_(\w+)$")
_outcomes = {}


def pytest_runtest_logreport(report):
    m = _ACCEPTANCE.search(report.nodeid)
    if m and (report.when == "call" or report.outcome != "passed"):
        _outcomes.setdefault(int(m[1]), (m[2], report.outcome))


def pytest_terminal_summary(terminalreporter):
    """One PASS/FAIL line per acceptance criterion that ran."""
    if not _outcomes:
        return
    mod = next((m for n, m in sys.modules.items() if n.endswith("test_acceptance")), None)
    recorded = getattr(mod, "RESULTS", {})
    terminalreporter.section("acceptance criteria")
    for num in sorted(_outcomes):
        name, outcome = _outcomes[num]
        line = recorded.get(num) or f"criterion {num:2d} [FAIL] {name.replace('_', ' ')} -- {outcome} before a verdict"
        terminalreporter.write_line(line)
