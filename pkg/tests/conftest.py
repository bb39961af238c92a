"""Shared fixtures: builtin scenario runs are expensive, so each runs once per session."""

from __future__ import annotations

import pytest

from inertia_lab.harness import builtin_scenarios, run_scenario

_CRITERIA: dict[int, dict] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion covered by the test")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None or rep.when != "call" and not rep.failed:
        return
    number, title = marker.args
    entry = _CRITERIA.setdefault(number, {"title": title, "passed": True, "tests": 0})
    if rep.when == "call":
        entry["tests"] += 1
    if rep.failed:
        entry["passed"] = False


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_CRITERIA):
        entry = _CRITERIA[number]
        status = "PASS" if entry["passed"] else "FAIL"
        terminalreporter.write_line(f"criterion {number:2d}: {status}  {entry['title']} ({entry['tests']} tests)")


def _runs(name):
    return {cfg.name: run_scenario(cfg, write=False) for cfg in builtin_scenarios(name)}


@pytest.fixture(scope="session")
def theorem_runs():
    return _runs("theorems")


@pytest.fixture(scope="session")
def oracle_runs():
    return _runs("oracles")
