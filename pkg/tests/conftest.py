import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from chaoscontrol import (
    IntegratorConfig,
    LorenzParams,
    random_initial_state,
    relax_to_attractor,
    simulate,
)

INTEGRATOR = IntegratorConfig(dt=0.05, substeps=5)
TRAIN_PARAMS = LorenzParams(sigma=10.0, rho=166.15, beta=8.0 / 3.0)
PLANT_PARAMS = LorenzParams(sigma=10.0, rho=167.2, beta=8.0 / 3.0)


def attractor_trajectory(params, n_steps, seed=0):
    rng = np.random.default_rng(seed)
    u0 = relax_to_attractor(random_initial_state(rng), params, INTEGRATOR)
    return simulate(u0, params, INTEGRATOR, n_steps)


@pytest.fixture(scope="session")
def train_run_short():
    """Intermittent-regime series long enough to fit either predictor."""
    return attractor_trajectory(TRAIN_PARAMS, 999, seed=11)


@pytest.fixture(scope="session")
def train_run_long():
    """Horizon-length intermittent-regime series for climate estimates."""
    return attractor_trajectory(TRAIN_PARAMS, 10_000, seed=11)
