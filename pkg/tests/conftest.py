from __future__ import annotations

import pytest

_LABELS: dict[str, str] = {}
_OUTCOMES: dict[str, str] = {}


def pytest_configure(config: pytest.Config) -> None:
    config.addinivalue_line("markers", "criterion(label): acceptance criterion reported in the summary")


def pytest_collection_modifyitems(items: list[pytest.Item]) -> None:
    for item in items:
        marker = item.get_closest_marker("criterion")
        if marker:
            _LABELS[item.nodeid] = marker.args[0]


def pytest_runtest_logreport(report: pytest.TestReport) -> None:
    if report.nodeid not in _LABELS:
        return
    if report.failed:
        _OUTCOMES[report.nodeid] = "FAIL"
    elif report.when == "call" and report.nodeid not in _OUTCOMES:
        _OUTCOMES[report.nodeid] = "PASS"


def pytest_terminal_summary(terminalreporter) -> None:
    if not _LABELS:
        return
    terminalreporter.section("acceptance criteria")
    for nodeid, label in _LABELS.items():
        outcome = _OUTCOMES.get(nodeid, "NOT RUN")
        terminalreporter.write_line(f"[{outcome}] {label}")
