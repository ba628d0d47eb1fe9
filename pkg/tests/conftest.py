import numpy as np
import pytest

from jsrcert.sampling import ModeSet


@pytest.fixture(scope="session")
def parrilo() -> ModeSet:
    """Pair of 2x2 modes with JSR 1 but no common quadratic certificate."""
    return ModeSet((np.array([[1.0, 0.0], [1.0, 0.0]]),
                    np.array([[0.0, 1.0], [0.0, -1.0]])))


@pytest.fixture(scope="session")
def double_identity() -> ModeSet:
    return ModeSet((2.0 * np.eye(2),))
