import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

CRITERIA = {
    "AC1": "aggregation identity",
    "AC2": "smoother vs dense conditional",
    "AC3": "conjugate reduction",
    "AC4": "distribution samplers",
    "AC5": "volatility machinery",
    "AC6": "normal-gamma hierarchy",
    "AC7": "simulation-based calibration",
    "AC8": "homoskedastic equivalence",
    "AC9": "metric fixtures",
    "AC10": "steady-state convergence",
    "AC11": "end-to-end pipeline",
}

_outcomes: dict[str, list[str]] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(name): acceptance criterion a test belongs to")


def pytest_runtest_logreport(report):
    crit = getattr(report, "criterion", None)
    if crit is None:
        return
    if report.when == "call" or report.outcome != "passed":
        _outcomes.setdefault(crit, []).append(report.outcome)


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    mark = item.get_closest_marker("criterion")
    if mark is not None:
        outcome.get_result().criterion = mark.args[0]


def pytest_terminal_summary(terminalreporter):
    if not _outcomes:
        return
    terminalreporter.section("acceptance criteria")
    for crit, label in CRITERIA.items():
        got = _outcomes.get(crit)
        if got is None:
            status = "NOT RUN"
        elif all(o == "passed" for o in got):
            status = "PASS"
        else:
            status = "FAIL"
        terminalreporter.write_line(f"{crit:<5} {status:<8} {label}")
