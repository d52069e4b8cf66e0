import re
from collections import OrderedDict

_CRITERIA = OrderedDict()
_NAME = re.compile(r"test_c(\d+)_")


def pytest_runtest_logreport(report):
    if "test_acceptance.py" not in report.nodeid:
        return
    m = _NAME.search(report.nodeid)
    if not m:
        return
    key = int(m.group(1))
    entry = _CRITERIA.setdefault(key, {"passed": True, "checks": []})
    if report.when == "call" or report.outcome == "failed":
        ok = report.outcome == "passed"
        entry["checks"].append((report.nodeid.split("::")[-1], ok))
        entry["passed"] &= ok


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(_CRITERIA):
        entry = _CRITERIA[key]
        status = "PASS" if entry["passed"] else "FAIL"
        terminalreporter.write_line(f"criterion {key:2d}: {status}")
        for name, ok in entry["checks"]:
            terminalreporter.write_line(f"    {'pass' if ok else 'FAIL'}  {name}")
