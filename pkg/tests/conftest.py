"""Prints one PASS/FAIL line per acceptance criterion at the end of the run."""

import re

_RESULTS: dict[int, dict] = {}
_NAME = re.compile(r"test_acceptance\.py::test_criterion_(\d+)_(\w+)")


def pytest_runtest_logreport(report):
    m = _NAME.search(report.nodeid)
    if not m:
        return
    entry = _RESULTS.setdefault(int(m.group(1)), {"title": m.group(2).replace("_", " "), "ok": True, "checks": []})
    if report.failed:
        entry["ok"] = False
    for key, value in report.user_properties:
        if key == "checks":
            entry["checks"] = value


def pytest_terminal_summary(terminalreporter):
    if not _RESULTS:
        return
    tr = terminalreporter
    tr.write_sep("=", "acceptance criteria")
    for n in sorted(_RESULTS):
        entry = _RESULTS[n]
        tr.write_line(f"criterion {n} {entry['title']}: {'PASS' if entry['ok'] else 'FAIL'}")
        for name, ok, detail in entry["checks"]:
            if not ok:
                tr.write_line(f"    failed: {name} ({detail})")
