"""Shared pytest hooks.

Tests named ``test_criterion_*`` are the acceptance gate; their
outcomes are collected and echoed as one PASS/FAIL line each in a
dedicated terminal section so a run can be audited at a glance.
"""

_CRITERIA: dict[str, str] = {}


def pytest_runtest_logreport(report):
    name = report.location[2].split("[")[0]
    if not name.startswith("test_criterion_"):
        return
    if report.when == "call":
        _CRITERIA[name] = "PASS" if report.passed else "FAIL"
    elif report.failed:  # setup/teardown crash counts as a failure
        _CRITERIA[name] = "FAIL"


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for name in sorted(_CRITERIA):
        terminalreporter.write_line(f"{_CRITERIA[name]}  {name}")
