import numpy as np
import pytest

from napeeg.model import DEFAULT_BANDS


def band(name: str):
    return next(b for b in DEFAULT_BANDS if b.name == name)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
