import numpy as np
import pytest

from agevax import homogeneous_model, separable_model, gaussian_kernel_model


@pytest.fixture(scope="session")
def hom_model():
    # beta=2, mu=1, S0=1, I0=1e-4: the scalar R0=2 benchmark
    return homogeneous_model(n=101)


@pytest.fixture(scope="session")
def sep_model():
    return separable_model()


@pytest.fixture(scope="session")
def paper_model_small():
    # coarse version of the Gaussian-kernel benchmark, cheap enough to simulate often
    return gaussian_kernel_model(n=41)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
