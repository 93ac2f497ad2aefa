import numpy as np
import pytest

from pcveil import backend


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def restore_backend():
    """Let a test switch kernel backends and restore the default afterwards."""
    yield
    backend._active = None
