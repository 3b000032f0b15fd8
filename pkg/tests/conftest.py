"""Shared session fixtures: a few full-length runs reused across modules."""

import pytest

from windwave_id import config as cf
from windwave_id import pipeline as pl
from windwave_id.simulator import run_truth


def _truth(name):
    cfg = cf.load_config(name)
    plant = cf.build_plant(cfg)
    ds = run_truth(plant, cf.build_scenario(cfg), cf.build_simulation(cfg))
    return cfg, plant, ds


@pytest.fixture(scope="session")
def multisine():
    """(cfg, plant, dataset) of the linear-truth multi-sine preset."""
    return _truth("multisine")


@pytest.fixture(scope="session")
def multisine_estimate(multisine):
    cfg, _, ds = multisine
    return pl.estimate(ds, cfg, "filtered")


@pytest.fixture(scope="session")
def scenario1():
    return _truth("scenario1")


@pytest.fixture(scope="session")
def case3():
    return _truth("case3")


@pytest.fixture(scope="session")
def scenario1_estimates(scenario1):
    """(filtered result, gradient baseline result) on the regular-wave scenario."""
    cfg, _, ds = scenario1
    return pl.estimate(ds, cfg, "filtered"), pl.estimate(ds, cfg, "gradient")


_VERDICTS = []


@pytest.fixture
def verdict():
    """Record one PASS/FAIL line for the terminal summary."""
    def record(number, title, ok, detail=""):
        line = f"{'PASS' if ok else 'FAIL'}  criterion {number:2d}  {title}"
        if detail:
            line += f"  ({detail})"
        _VERDICTS.append((number, line))
        print(line)
        return ok
    return record


def pytest_terminal_summary(terminalreporter):
    if _VERDICTS:
        terminalreporter.section("acceptance criteria")
        for _, line in sorted(_VERDICTS):
            terminalreporter.write_line(line)
