"""Shared fixtures and the per-criterion acceptance summary."""
from __future__ import annotations

from collections import OrderedDict

import pytest

from hypothesis import settings

settings.register_profile("default", deadline=None, max_examples=60)
settings.load_profile("default")

_CRITERIA: "OrderedDict[str, list[str]]" = OrderedDict()


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(label): acceptance criterion exercised by the test")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None:
        return
    label = mark.args[0]
    results = _CRITERIA.setdefault(label, [])
    if rep.when == "call" or (rep.when == "setup" and rep.outcome != "passed"):
        results.append(rep.outcome)


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for label, outcomes in _CRITERIA.items():
        verdict = "PASS" if outcomes and all(o == "passed" for o in outcomes) else "FAIL"
        terminalreporter.write_line(f"{verdict}  {label}")


@pytest.fixture(scope="session")
def numerical_abstraction():
    from builders import numerical_model
    from countsynth.abstraction import build_abstraction

    return build_abstraction(numerical_model(), 0.32, 0.05)
