"""Collects acceptance results and prints one PASS/FAIL line per criterion."""

import pytest

_OUTCOMES = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number): acceptance criterion checked by the test")


def pytest_runtest_logreport(report):
    number = getattr(report, "criterion", None)
    if number is None:
        return
    failed = report.failed and report.when in ("setup", "call", "teardown")
    passed = report.passed and report.when == "call"
    if failed:
        _OUTCOMES[number] = False
    elif passed:
        _OUTCOMES.setdefault(number, True)


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    marker = item.get_closest_marker("criterion")
    if marker is not None:
        outcome.get_result().criterion = marker.args[0]


def pytest_terminal_summary(terminalreporter):
    if not _OUTCOMES:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_OUTCOMES):
        terminalreporter.write_line(f"criterion {number}: {'PASS' if _OUTCOMES[number] else 'FAIL'}")
