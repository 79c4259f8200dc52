import pytest

_CRITERIA = {}


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None:
        return
    if report.when == "call" or (report.when == "setup" and report.outcome != "passed"):
        n, title = mark.args
        entry = _CRITERIA.setdefault(n, {"title": title, "failed": [], "passed": 0, "measured": []})
        entry["measured"] += [v for k, v in report.user_properties if k == "measured"]
        if report.passed:
            entry["passed"] += 1
        else:
            entry["failed"].append(item.name)


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_CRITERIA):
        e = _CRITERIA[n]
        status = "PASS" if not e["failed"] else "FAIL"
        extra = "" if not e["failed"] else "  (failing: " + ", ".join(e["failed"]) + ")"
        terminalreporter.write_line(f"criterion {n:>2} {status}  {e['title']}{extra}")
        for m in e["measured"]:
            terminalreporter.write_line(f"              {m}")
