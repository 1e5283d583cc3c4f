"""Per-criterion pass/fail summary for the acceptance suite."""
import re

_CRITERION = re.compile(r"test_acceptance\.py::test_criterion_(\d+)_(\w+)")
_results: dict[int, tuple[str, str]] = {}


def pytest_runtest_logreport(report):
    m = _CRITERION.search(report.nodeid)
    if not m:
        return
    number, name = int(m.group(1)), m.group(2).replace("_", " ")
    if report.failed:
        _results[number] = ("FAIL", name)
    elif report.when == "call" and number not in _results:
        _results[number] = ("PASS", name)


def pytest_terminal_summary(terminalreporter):
    if not _results:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_results):
        status, name = _results[number]
        terminalreporter.write_line(f"criterion {number:2d}: {status}  {name}")
    passed = sum(s == "PASS" for s, _ in _results.values())
    terminalreporter.write_line(f"{passed}/{len(_results)} criteria pass")
