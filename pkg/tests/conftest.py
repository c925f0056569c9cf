import re

import pytest

_CRITERION = re.compile(r"test_criterion_(\d+)_")
_status: dict[int, str] = {}
_title: dict[int, str] = {}


def pytest_collection_modifyitems(items):
    for item in items:
        match = _CRITERION.search(item.nodeid)
        if match:
            n = int(match.group(1))
            doc = (item.function.__doc__ or "").strip().splitlines()
            _title[n] = doc[0] if doc else ""
            _status[n] = "NOT RUN"


def pytest_runtest_logreport(report):
    match = _CRITERION.search(report.nodeid)
    if not match:
        return
    n = int(match.group(1))
    if report.failed:
        _status[n] = "FAIL"
    elif report.when == "call" and _status.get(n) != "FAIL":
        _status[n] = "PASS"


@pytest.hookimpl(trylast=True)
def pytest_terminal_summary(terminalreporter):
    if not _status:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_status):
        terminalreporter.write_line(f"criterion {n}: {_status[n]}  {_title[n]}")
