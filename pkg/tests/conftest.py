import math
from pathlib import Path

import numpy as np
import pytest

from marsupial.core import Params, WorldState
from marsupial.scenario import load_scenario
from marsupial.sim import run

ROOT = Path(__file__).resolve().parents[1]
SCENARIOS = ROOT / "scenarios"

#: Gains and potential shape used by the shipped reference scenarios.
REFERENCE = Params(k_c=0.5, k_p=1.0, b=8.0, c=1.0, d=1.0, eta=9.0)
#: Initial carrier-target distance giving a release at exactly 2.4 s.
S0_REFERENCE = 8.0 * math.exp(1.2)


def line_state(s0: float, dim: int = 2) -> WorldState:
    """Carrier and passenger at the origin, target ``s0`` away along the first axis."""
    zero = np.zeros(dim)
    target = np.zeros(dim)
    target[0] = s0
    return WorldState.create(zero, zero, target)


@pytest.fixture(scope="session")
def reference_scenario():
    return load_scenario(SCENARIOS / "paper_3d.scn")


@pytest.fixture(scope="session")
def reference_run(reference_scenario):
    sc = reference_scenario
    return run(sc.initial_state(), sc.sim_config(), sc.params)


@pytest.fixture(scope="session")
def baseline_run(reference_scenario):
    sc = reference_scenario
    return run(sc.initial_state(), sc.sim_config("baseline"), sc.params)


@pytest.fixture(scope="session")
def obstacle_scenario():
    return load_scenario(SCENARIOS / "obstacles_2d.scn")


@pytest.fixture(scope="session")
def obstacle_run(obstacle_scenario):
    sc = obstacle_scenario
    return run(sc.initial_state(), sc.sim_config(), sc.params)
