import re

_CRITERION = re.compile(r"test_criterion_(\d+)")
_results = {}


def pytest_runtest_logreport(report):
    m = _CRITERION.search(report.nodeid)
    if not m:
        return
    n = int(m.group(1))
    if report.failed:
        _results[n] = "FAIL"
    elif report.when == "call" and report.passed:
        _results.setdefault(n, "PASS")
    elif report.skipped:
        _results.setdefault(n, "SKIP")


def pytest_terminal_summary(terminalreporter):
    if not _results:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_results):
        terminalreporter.write_line(f"criterion {n:2d}: {_results[n]}")
