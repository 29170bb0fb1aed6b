"""Session-scoped simulation fixtures.

The theorem-check scenario pair costs tens of seconds per refinement level,
so each history is computed once and shared by the acceptance criteria and
the integration tests.  Wall-clock per run lands in ``sim_seconds`` for the
runtime gates.
"""

import dataclasses
import pathlib
import time

import pytest

from mptherm.config import parse_scenario
from mptherm.dynamics import run_simulation

SCENARIO_DIR = pathlib.Path(__file__).resolve().parent.parent / "scenarios"

_SIM_SECONDS = {}


def _timed(scn, key):
    t0 = time.perf_counter()
    hist = run_simulation(scn)
    _SIM_SECONDS[key] = time.perf_counter() - t0
    return hist


@pytest.fixture(scope="session")
def sim_seconds():
    return _SIM_SECONDS


@pytest.fixture(scope="session")
def scenario_a():
    return parse_scenario(SCENARIO_DIR / "reciprocity_a.toml")


@pytest.fixture(scope="session")
def scenario_b():
    return parse_scenario(SCENARIO_DIR / "reciprocity_b.toml")


@pytest.fixture(scope="session")
def pair_l1(scenario_a, scenario_b):
    return _timed(scenario_a, "a_l1"), _timed(scenario_b, "b_l1")


@pytest.fixture(scope="session")
def pair_l2(scenario_a, scenario_b):
    return (_timed(scenario_a.refined(2), "a_l2"),
            _timed(scenario_b.refined(2), "b_l2"))


@pytest.fixture(scope="session")
def pair_ext(scenario_a, scenario_b):
    # doubled horizon at halved dt, for the transform-domain truncation study
    return (_timed(scenario_a.extended(2), "a_ext"),
            _timed(scenario_b.extended(2), "b_ext"))


@pytest.fixture(scope="session")
def energy_scenario():
    return parse_scenario(SCENARIO_DIR / "energy_decoupled.toml")


@pytest.fixture(scope="session")
def energy_hist(energy_scenario):
    return _timed(energy_scenario, "energy")


@pytest.fixture(scope="session")
def energy_hist_fine(energy_scenario):
    return _timed(dataclasses.replace(energy_scenario,
                                      dt=energy_scenario.dt / 2.0),
                  "energy_fine")


@pytest.fixture(scope="session")
def front_hist():
    return _timed(parse_scenario(SCENARIO_DIR / "front_pulse.toml"), "front")
