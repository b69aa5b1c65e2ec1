"""Collects acceptance-criterion outcomes and prints one line per criterion
at the end of the run."""

import re

_CRITERION_PATTERN = re.compile(r"test_acceptance\.py.*criterion_(\d+)")
_results: dict[int, bool] = {}


def pytest_runtest_logreport(report):
    if report.when != "call":
        return
    m = _CRITERION_PATTERN.search(report.nodeid)
    if not m:
        return
    k = int(m.group(1))
    ok = report.outcome == "passed"
    _results[k] = _results.get(k, True) and ok


def pytest_terminal_summary(terminalreporter):
    if not _results:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(_results):
        status = "PASS" if _results[k] else "FAIL"
        terminalreporter.write_line(f"criterion {k}: {status}")
