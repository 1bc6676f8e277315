import pytest

_RESULTS = []


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title, budget_s): acceptance criterion")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None:
        return
    if rep.when == "call" or (rep.when == "setup" and not rep.passed):
        number, title, budget = mark.args
        _RESULTS.append((number, title, budget, rep.outcome, rep.duration))


def pytest_terminal_summary(terminalreporter):
    if not _RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for number, title, budget, outcome, dur in sorted(_RESULTS):
        status = "PASS" if outcome == "passed" else "FAIL"
        terminalreporter.write_line(f"{status} criterion {number:>2}: {title} ({dur:.1f}s, budget {budget}s)")
