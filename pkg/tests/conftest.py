import pytest

_verdicts = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(name): acceptance criterion checked by this test")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None or report.when != "call" and not report.failed:
        return
    name = marker.args[0]
    label = f"{name} [{item.callspec.id}]" if hasattr(item, "callspec") else name
    # a failure in setup or call marks the criterion red; a later pass must not overwrite it
    if _verdicts.get(label) != "FAIL":
        _verdicts[label] = "FAIL" if report.failed else "PASS"


def pytest_terminal_summary(terminalreporter):
    if not _verdicts:
        return
    terminalreporter.section("acceptance criteria")
    for label, verdict in _verdicts.items():
        terminalreporter.write_line(f"{verdict}  {label}")
    n_fail = sum(v == "FAIL" for v in _verdicts.values())
    terminalreporter.write_line(f"{len(_verdicts) - n_fail}/{len(_verdicts)} criteria passed")
