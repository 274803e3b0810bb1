import math

import numpy as np
import pytest


def two_level(m, k, t, psi0=(1.0, 1.0)):
    """Closed-form physical solution of i psi' = [[m, k], [k, -m]] psi for constant m."""
    E = math.hypot(m, k)
    t = np.asarray(t, dtype=float)
    c, s = np.cos(E * t), np.sin(E * t)
    a, b = psi0
    psi_plus = c * a - 1j * s * (m * a + k * b) / E
    psi_minus = c * b - 1j * s * (k * a - m * b) / E
    return psi_plus, psi_minus


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)
