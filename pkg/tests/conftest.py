import numpy as np
import pytest

from hypocone.models import DEFAULT_NAMES, get_model


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(params=DEFAULT_NAMES)
def model(request):
    return get_model(request.param)
