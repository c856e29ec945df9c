from __future__ import annotations

import re

_CRITERIA: dict[int, tuple[str, str]] = {}


def pytest_runtest_logreport(report):
    match = re.search(r"test_criterion_(\d+)_(\w+)", report.nodeid)
    if not match:
        return
    number, title = int(match.group(1)), match.group(2).replace("_", " ")
    if report.when == "call" or report.outcome != "passed":
        previous = _CRITERIA.get(number, (title, "PASS"))[1]
        outcome = "PASS" if report.outcome == "passed" and previous == "PASS" else "FAIL"
        if report.when == "call" or outcome == "FAIL":
            _CRITERIA[number] = (title, outcome)


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_CRITERIA):
        title, outcome = _CRITERIA[number]
        terminalreporter.write_line(f"criterion {number:2d} {outcome}: {title}")
