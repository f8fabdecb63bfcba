import numpy as np
import pytest

from kinterp import Couple, MeasureSpace


@pytest.fixture
def l1linf():
    return lambda n, w=None: Couple.l1_linf(
        MeasureSpace(tuple(w)) if w is not None else MeasureSpace.uniform(n))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
