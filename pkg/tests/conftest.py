import numpy as np
import pytest

_results: dict[str, dict] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(label, title): acceptance criterion")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None:
        return
    label, title = mark.args
    entry = _results.setdefault(label, {"title": title, "passed": True, "details": []})
    if rep.failed:
        entry["passed"] = False
    if rep.when == "call":
        entry["details"] += [str(v) for k, v in item.user_properties if k == "detail"]


def pytest_terminal_summary(terminalreporter):
    if not _results:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")

    def key(label):
        digits = "".join(ch for ch in label if ch.isdigit())
        return int(digits), label

    for label in sorted(_results, key=key):
        r = _results[label]
        status = "PASS" if r["passed"] else "FAIL"
        tr.write_line(f"{status}  criterion {label:<3} {r['title']}")
        for d in r["details"]:
            tr.write_line(f"        {d}")


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
