"""Ground-truth models of the two reference experiments."""

import numpy as np

from .hmm import HmmModel, stationary
from .manifold import ManifoldKind
from .rgauss import RiemannianGaussian

EXAMPLE1_P = np.array([
    [0.4, 0.3, 0.3],
    [0.2, 0.6, 0.2],
    [0.1, 0.1, 0.8],
])
EXAMPLE1_MEANS = [0.0 + 0.0j, 0.29 + 0.82j, -0.29 + 0.82j]
EXAMPLE1_SIGMAS = [0.1, 0.4, 0.4]
EXAMPLE1_CHAINS = 20
EXAMPLE1_LENGTH = 10_000

EXAMPLE2_P = np.array([
    [0.3, 0.1, 0.2, 0.1, 0.3],
    [0.1, 0.4, 0.2, 0.2, 0.1],
    [0.2, 0.2, 0.3, 0.1, 0.2],
    [0.1, 0.1, 0.2, 0.5, 0.1],
    [0.4, 0.1, 0.1, 0.1, 0.3],
])
# (a, b, c) for [[a, b], [b, c]]
EXAMPLE2_MEANS = [
    (1.646, 0.056, 2.379),
    (2.294, 0.744, 1.415),
    (2.631, -0.127, 1.277),
    (0.674, 0.454, 2.056),
    (1.829, -0.919, 1.602),
]
EXAMPLE2_SIGMA = 0.1
EXAMPLE2_LENGTH = 10_000

# reported estimates for the SPD(2) experiment
EXAMPLE2_REPORTED_P_HAT = np.array([
    [0.291, 0.088, 0.195, 0.092, 0.334],
    [0.104, 0.409, 0.185, 0.188, 0.114],
    [0.199, 0.206, 0.297, 0.098, 0.200],
    [0.091, 0.113, 0.202, 0.482, 0.112],
    [0.407, 0.105, 0.106, 0.083, 0.299],
])
EXAMPLE2_REPORTED_PI = np.array([0.227, 0.171, 0.199, 0.195, 0.207])
EXAMPLE2_REPORTED_PI_HAT = np.array([0.229, 0.159, 0.201, 0.195, 0.216])


def _spd(a, b, c):
    return np.array([[a, b], [b, c]], dtype=float)


def example1_model():
    """Three-state chain with Poincare-disk observations, started in state 1."""
    comps = [RiemannianGaussian(ManifoldKind.POINCARE_DISK, m, s)
             for m, s in zip(EXAMPLE1_MEANS, EXAMPLE1_SIGMAS)]
    return HmmModel(EXAMPLE1_P.copy(), np.array([1.0, 0.0, 0.0]), comps)


def example2_model():
    """Five-state chain with SPD(2) observations, started in stationarity."""
    comps = [RiemannianGaussian(ManifoldKind.SPD2, _spd(*m), EXAMPLE2_SIGMA)
             for m in EXAMPLE2_MEANS]
    return HmmModel(EXAMPLE2_P.copy(), stationary(EXAMPLE2_P), comps)
