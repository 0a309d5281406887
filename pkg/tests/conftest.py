"""Collects acceptance results and prints one line per criterion at the end."""

import pytest

_RESULTS: dict[str, list] = {}


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None or report.when != "call" and not report.failed:
        return
    label = marker.args[0]
    info = marker.kwargs.get("informational", False)
    doc = marker.kwargs.get("desc") or item.obj.__doc__ or item.name
    entry = _RESULTS.setdefault(label, [True, info, doc])
    if report.failed:
        entry[0] = False


def pytest_terminal_summary(terminalreporter):
    if not _RESULTS:
        return
    terminalreporter.section("acceptance criteria")

    def order(label):
        head = label.split()[0].lstrip("C")
        return (int(head) if head.isdigit() else 99, label)

    for label in sorted(_RESULTS, key=order):
        ok, info, doc = _RESULTS[label]
        status = "PASS" if ok else "FAIL"
        if info:
            status += " (informational)"
        terminalreporter.write_line(f"{label}: {status} - {' '.join(doc.split())}")
