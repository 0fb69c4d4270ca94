import pytest

_RESULTS = pytest.StashKey[list]()


def pytest_configure(config):
    config.stash[_RESULTS] = []


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None or report.when != "call":
        return
    number, title = marker.args
    detail = dict(item.user_properties).get("detail", "")
    if report.failed and not detail:
        detail = str(call.excinfo.value).splitlines()[0] if call.excinfo else "error"
    item.config.stash[_RESULTS].append((number, title, report.passed, detail))


def pytest_terminal_summary(terminalreporter, config):
    results = sorted(config.stash[_RESULTS])
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for number, title, ok, detail in results:
        terminalreporter.write_line(f"[{'PASS' if ok else 'FAIL'}] {number}. {title}: {detail}")
