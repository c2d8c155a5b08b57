import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

_KEY = pytest.StashKey[dict]()


def pytest_configure(config):
    config.stash[_KEY] = {}


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None or (rep.when != "call" and rep.passed):
        return
    num, title = mark.args
    detail = dict(item.user_properties).get("detail", "")
    state = "PASS" if rep.passed else ("SKIP" if rep.skipped else "FAIL")
    item.config.stash[_KEY][num] = (title, state, detail)


def pytest_terminal_summary(terminalreporter, config):
    results = config.stash[_KEY]
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(results):
        title, state, detail = results[num]
        line = f"criterion {num} [{title}]: {state}"
        terminalreporter.write_line(line + (f"  ({detail})" if detail else ""))
