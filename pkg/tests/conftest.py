"""Collects acceptance-criterion outcomes and prints one line per criterion."""
import pytest

_RESULTS = {}
_INFO = []


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None:
        return
    cid, title = marker.args
    failed = report.failed
    if report.when == "call" or failed:
        prev = _RESULTS.get(cid, (title, "PASS", ""))
        status = "FAIL" if failed or prev[1] == "FAIL" else "PASS"
        if report.skipped and report.when == "call":
            status = "SKIP"
        detail = prev[2]
        if failed:
            msg = str(report.longrepr.reprcrash.message) if hasattr(report.longrepr, "reprcrash") else ""
            detail = msg.splitlines()[0][:160] if msg else "failed"
        _RESULTS[cid] = (title, status, detail)


@pytest.fixture
def info():
    """Record an informational line printed with the acceptance summary."""
    return _INFO.append


def pytest_terminal_summary(terminalreporter):
    if not _RESULTS:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")

    def key(cid):
        head = "".join(ch for ch in cid if ch.isdigit())
        return (int(head) if head else 0, cid)

    for cid in sorted(_RESULTS, key=key):
        title, status, detail = _RESULTS[cid]
        line = f"criterion {cid:<3} {status}  {title}"
        if status == "FAIL" and detail:
            line += f"  [{detail}]"
        tr.write_line(line)
    for text in _INFO:
        tr.write_line(f"info: {text}")
