import numpy as np
import pytest

from msense import generate_ground_truth, generate_sensing


@pytest.fixture(scope="session")
def gt20():
    """Reference problem: d=20, r=3, spectrum (1, 0.9, 0.8), no residual part."""
    return generate_ground_truth(20, 3, [1.0, 0.9, 0.8], "zeros", seed=424242)


@pytest.fixture(scope="session")
def sensing20(gt20):
    return generate_sensing(gt20, n=200, sigma=0.0, seed=424242)


@pytest.fixture()
def rng():
    return np.random.default_rng(20240817)
