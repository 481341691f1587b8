import numpy as np
import pytest

from qmpe_lab import model

#: Mean occupation at beta = Delta = 1, used across frozen expected values.
NBAR = 1.0 / (np.e - 1.0)


@pytest.fixture
def bath():
    return model.BathSpec(beta=1.0, gamma=1.0)


@pytest.fixture
def probe3():
    return model.ProbeSpec(3, 1.0)


@pytest.fixture
def liou3(probe3, bath):
    return model.build_liouvillian(probe3, bath)


def random_density(rng: np.random.Generator, d: int) -> np.ndarray:
    """Ginibre-induced random full-rank density matrix."""
    g = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
    rho = g @ g.conj().T
    return rho / np.trace(rho).real


def random_hermitian(rng: np.random.Generator, d: int) -> np.ndarray:
    g = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
    return 0.5 * (g + g.conj().T)
