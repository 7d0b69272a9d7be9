import sys
from pathlib import Path

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

sys.path.insert(0, str(Path(__file__).parent))

settings.register_profile(
    "repro", deadline=None, derandomize=True,
    suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("repro")

GOLDEN_DIR = Path(__file__).parent / "goldens"


@pytest.fixture(scope="session")
def rng():
    return np.random.default_rng(20240817)


@pytest.fixture(scope="session")
def abc_field():
    import lcsdual
    return lcsdual.steady_abc()


@pytest.fixture(scope="session")
def cats_eye_field():
    import lcsdual
    return lcsdual.cats_eye()


@pytest.fixture(scope="session")
def aperiodic_field():
    import lcsdual
    return lcsdual.aperiodic_abc()
