import json
from pathlib import Path

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile(
    "default", max_examples=60, deadline=None, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("default")

ORACLE_DIR = Path(__file__).parent / "oracles"


@pytest.fixture(scope="session")
def loss_oracle():
    return json.loads((ORACLE_DIR / "loss_oracle.json").read_text())


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
