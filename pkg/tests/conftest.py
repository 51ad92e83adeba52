"""Shared fixtures: the car bundle and small synthetic model builders,
plus a per-criterion summary for the acceptance suite."""

from __future__ import annotations

import sys
from pathlib import Path

import pytest

from attacktree.bundle import load_bundle

FIXTURES = Path(__file__).parent / "fixtures"
sys.path.insert(0, str(Path(__file__).parent))

_ACCEPTANCE_RESULTS: list[tuple[str, str]] = []


def pytest_runtest_logreport(report):
    if report.when == "call" and "test_acceptance.py" in report.nodeid:
        name = report.nodeid.split("::")[-1]
        _ACCEPTANCE_RESULTS.append((name, report.outcome))


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE_RESULTS:
        return
    terminalreporter.write_line("")
    terminalreporter.write_line("acceptance criteria:")
    for name, outcome in _ACCEPTANCE_RESULTS:
        terminalreporter.write_line(f"  {outcome.upper():6s}  {name}")


@pytest.fixture(scope="session")
def car_bundle_dir() -> Path:
    return FIXTURES / "car"


@pytest.fixture(scope="session")
def car_renamed_dir() -> Path:
    return FIXTURES / "car_renamed"


@pytest.fixture(scope="session")
def car_deleted_dir() -> Path:
    return FIXTURES / "car_deleted"


@pytest.fixture(scope="session")
def broken_bundle_dir() -> Path:
    return FIXTURES / "broken"


@pytest.fixture(scope="session")
def car(car_bundle_dir):
    return load_bundle(car_bundle_dir)


@pytest.fixture(scope="session")
def car_renamed(car_renamed_dir):
    return load_bundle(car_renamed_dir)


@pytest.fixture(scope="session")
def car_deleted(car_deleted_dir):
    return load_bundle(car_deleted_dir)


@pytest.fixture()
def car_fe(car):
    return car.study.feared_event("fe-braking-integrity")
