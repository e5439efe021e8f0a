import re

_CRITERION = re.compile(r"test_criterion_(\d+)")
_outcomes: dict[int, str] = {}


def pytest_runtest_logreport(report):
    m = _CRITERION.search(report.nodeid)
    if not m:
        return
    n = int(m.group(1))
    if report.failed:
        _outcomes[n] = "FAIL"
    elif report.when == "call" and report.passed:
        _outcomes.setdefault(n, "PASS")
    elif report.skipped:
        _outcomes.setdefault(n, "SKIP")


def pytest_terminal_summary(terminalreporter):
    if not _outcomes:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_outcomes):
        terminalreporter.write_line(f"criterion {n:2d}: {_outcomes[n]}")
