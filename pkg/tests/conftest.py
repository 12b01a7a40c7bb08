import warnings

import numpy as np
import pytest

from intersim.corpus import bundled_scenario, bundled_trajectories, generate_corpus
from intersim.dataset import build_dataset
from intersim.energy import AgentState, EnergyModel, MaskTable, default_weights

# criterion number -> (passed, detail), filled by tests/test_acceptance.py
ACCEPTANCE = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        passed, detail = ACCEPTANCE[n]
        terminalreporter.write_line(f"criterion {n:2d}: {'PASS' if passed else 'FAIL'}  {detail}")


@pytest.fixture(scope="session")
def crossroad():
    return bundled_scenario()


@pytest.fixture(scope="session")
def corpus(crossroad):
    return generate_corpus(crossroad)


@pytest.fixture(scope="session")
def denoised_dataset(crossroad):
    return build_dataset(bundled_trajectories("denoised"), crossroad.dt, crossroad)


@pytest.fixture(scope="session")
def model():
    return EnergyModel(mask=MaskTable.default())


@pytest.fixture
def make_agent():
    """Factory for a car-like agent at the origin heading along +x."""

    def make(**kw):
        kind = kw.pop("kind", "car")
        velocity = np.asarray(kw.pop("velocity", (5.0, 0.0)), dtype=float)
        params = dict(
            id=0, kind=kind, position=np.zeros(2), velocity=velocity, guidance=np.array([1.0, 0.0]),
            expected_speed=5.0, e1=5.0, e2=7.0, planning="straight", departure_lane="L",
            goal=np.array([100.0, 0.0]), radius=1.0, weights=default_weights(kind),
            lane_direction=np.array([1.0, 0.0]),
        )
        params.update(kw)
        return AgentState(**params)

    return make


@pytest.fixture(autouse=True)
def _quiet_halts():
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        yield
