import os
import sys

import numpy as np
import pytest

sys.path.insert(0, os.path.dirname(__file__))

from survefs.data import Outcome, SurvivalDataset


def random_outcome(rng, n, censor=0.4):
    """Continuous times (no ties) with roughly the requested censoring."""
    time = rng.exponential(1.0, n) + 1e-3
    event = (rng.uniform(size=n) > censor).astype(int)
    if event.sum() == 0:
        event[int(rng.integers(0, n))] = 1
    return Outcome(time, event)


def random_dataset(rng, n, p, censor=0.4):
    out = random_outcome(rng, n, censor)
    X = rng.standard_normal((n, p))
    names = tuple(f"f{j:03d}" for j in range(p))
    return SurvivalDataset(X, out.time, out.event, names, ("continuous",) * p)


@pytest.fixture
def rng():
    return np.random.default_rng(20240811)
