import numpy as np
import pytest

from bevfuse.tensor import set_default_dtype


@pytest.fixture(autouse=True)
def float64_mode():
    """Gradient checks are unreliable in 32-bit; tests run in 64-bit."""
    set_default_dtype(np.float64)
    yield
    set_default_dtype(np.float64)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
