"""Independent reference computations used by the tests.

Nothing here calls into the package's numerical kernels: distances,
densities and normalizers are recomputed from their textbook formulas.
"""

import itertools

import numpy as np
from scipy import integrate


def disk_dist(y, z):
    y = np.asarray(y, dtype=complex)
    z = np.asarray(z, dtype=complex)
    num = 2.0 * np.abs(y - z) ** 2
    den = (1.0 - np.abs(y) ** 2) * (1.0 - np.abs(z) ** 2)
    return np.arccosh(1.0 + num / den)


def disk_normalization_quad(sigma):
    """``2 pi int_0^inf exp(-r^2 / 2 sigma^2) sinh(r) dr`` by adaptive quadrature."""
    upper = sigma * sigma + 20.0 * sigma  # integrand peaks near sigma^2
    val, _ = integrate.quad(lambda r: np.exp(-r * r / (2 * sigma * sigma)) * np.sinh(r),
                            0.0, upper, epsabs=0.0, epsrel=1e-13, limit=200)
    return 2.0 * np.pi * val


def spd2_normalization_quad(sigma):
    """SPD(2) normalizer by reduction to eigenvalue-log coordinates.

    Writing ``Y = R(theta) diag(e^r1, e^r2) R(theta)^T`` the metric
    ``tr((Y^-1 dY)^2)`` becomes ``dr1^2 + dr2^2 + 8 sinh^2((r1 - r2)/2) dtheta^2``.
    Over ``r1 > r2``, ``theta in [0, pi)`` the chart is one-to-one, and with
    ``u = (r1 - r2)/sqrt 2``, ``w = (r1 + r2)/sqrt 2`` the ``w`` integral is
    Gaussian.
    """
    s2 = sigma * sigma
    w_int = np.sqrt(2 * np.pi) * sigma
    upper = 2 * s2 + 20 * sigma
    u_int, _ = integrate.quad(lambda u: np.exp(-u * u / (2 * s2)) * np.sinh(u / np.sqrt(2)),
                              0.0, upper, epsabs=0.0, epsrel=1e-13, limit=200)
    return np.sqrt(8.0) * np.pi * w_int * u_int


def spd2_normalization_direct(sigma, n=151, n_phi=801):
    """SPD(2) normalizer by brute-force quadrature in matrix entries.

    ``dv = sqrt(2) det(Y)^(-3/2) da db dc`` for ``Y = [[a, b], [b, c]]``,
    with ``a = e^x``, ``c = e^z``, ``b = sin(phi) sqrt(ac)``; ``d^2`` is the
    sum of squared log-eigenvalues.
    """
    L = 9 * sigma
    x = np.linspace(-L, L, n)
    X, Z = np.meshgrid(x, x, indexing="ij")
    a, c = np.exp(X), np.exp(Z)
    phi = np.linspace(-np.pi / 2, np.pi / 2, n_phi)[1:-1]
    total = 0.0
    for p in phi:
        t = np.sin(p)
        b = t * np.sqrt(a * c)
        det = a * c * (1 - t * t)
        disc = np.sqrt((a - c) ** 2 + 4 * b * b)
        l1 = (a + c + disc) / 2
        l2 = det / l1
        d2 = np.log(l1) ** 2 + np.log(l2) ** 2
        jac = a * c * np.sqrt(a * c) * np.cos(p)
        total += np.sum(np.exp(-d2 / (2 * sigma**2)) * np.sqrt(2) * det**-1.5 * jac)
    return total * (x[1] - x[0]) ** 2 * (phi[1] - phi[0])


def disk_gaussian_density(mean, sigma, y, Z):
    d = disk_dist(mean, y)
    return np.exp(-d * d / (2 * sigma * sigma)) / Z


def _mobius_to_origin(a, z):
    return (z - a) / (1.0 - np.conj(a) * z)


def disk_k_quadrature(means, sigmas, n_theta=2048, n_panels=240, order=10, truncation=12.0):
    """Effective observation matrix on the disk by tensor polar quadrature.

    The grid is centred on the sharpest component (smallest sigma), after an
    isometric Mobius shift that moves it to the origin. Radial direction:
    composite Gauss-Legendre on ``[0, truncation * max(sigma)]``; angular
    direction: periodic trapezoid rule. Area element ``sinh(r) dr dtheta``
    in the geodesic polar coordinates ``z = tanh(r/2) e^{i theta}``.
    """
    means = np.asarray(means, dtype=complex)
    sigmas = np.asarray(sigmas, dtype=float)
    centre = means[int(np.argmin(sigmas))]
    shifted = _mobius_to_origin(centre, means)
    R = truncation * sigmas.max()
    x, w = np.polynomial.legendre.leggauss(order)
    edges = np.linspace(0.0, R, n_panels + 1)
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[1:] + edges[:-1])
    r = (mid[:, None] + half[:, None] * x[None, :]).ravel()
    wr = (half[:, None] * w[None, :]).ravel() * np.sinh(r)
    theta = np.arange(n_theta) * (2 * np.pi / n_theta)
    wt = 2 * np.pi / n_theta
    z = np.tanh(r / 2)[:, None] * np.exp(1j * theta)[None, :]
    Zs = [disk_normalization_quad(s) for s in sigmas]
    dens = [disk_gaussian_density(m, s, z, Zk) for m, s, Zk in zip(shifted, sigmas, Zs)]
    n = len(means)
    K = np.empty((n, n))
    for i in range(n):
        for j in range(i, n):
            K[i, j] = K[j, i] = float(np.sum(wr[:, None] * dens[i] * dens[j]) * wt)
    return K


def gaussian_self_overlap(normalization, sigma):
    """``int B^2 dv = Z(sigma / sqrt 2) / Z(sigma)^2`` for an isotropic Gaussian."""
    return normalization(sigma / np.sqrt(2)) / normalization(sigma) ** 2


def simplex_grid(step=1e-3):
    """All points of the 3-simplex with coordinates on a ``step`` lattice."""
    m = int(round(1 / step))
    i, j = np.meshgrid(np.arange(m + 1), np.arange(m + 1), indexing="ij")
    keep = i + j <= m
    i, j = i[keep], j[keep]
    return np.stack([i, j, m - i - j], axis=1) / m


def brute_force_simplex_projection(v, grid):
    d = np.sum((grid - np.asarray(v)[None, :]) ** 2, axis=1)
    return grid[int(np.argmin(d))]


def brute_force_assignment(cost):
    n = len(cost)
    return min(sum(cost[i, p[i]] for i in range(n)) for p in itertools.permutations(range(n)))


def stationary_by_elimination(P):
    """Solve ``pi P = pi`` with ``sum(pi) = 1`` via least squares on the augmented system."""
    n = len(P)
    A = np.vstack([P.T - np.eye(n), np.ones((1, n))])
    b = np.zeros(n + 1)
    b[-1] = 1.0
    return np.linalg.lstsq(A, b, rcond=None)[0]


def random_stochastic(rng, n, m=None, concentration=1.0):
    m = n if m is None else m
    return rng.dirichlet(np.full(m, concentration), size=n)
