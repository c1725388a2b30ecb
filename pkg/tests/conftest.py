import pytest

_acceptance_results: dict[str, str] = {}


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    if "test_acceptance" in item.nodeid and rep.when == "call":
        _acceptance_results[item.name] = "PASS" if rep.passed else "FAIL"


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not _acceptance_results:
        return
    terminalreporter.section("acceptance criteria")
    for name in sorted(_acceptance_results):
        terminalreporter.write_line(f"{_acceptance_results[name]}  {name}")
