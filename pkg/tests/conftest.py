import os

import numpy as np
import pytest


@pytest.fixture
def rng():
    seed = int(os.environ.get("IMPULSE_GC_SEED", "1729"))
    return np.random.default_rng(seed)
