"""Isotropic Riemannian Gaussian distributions on the disk and on SPD(2).

The density with respect to the Riemannian volume is
``exp(-d(y, mean)^2 / (2 sigma^2)) / Z(sigma)``, where ``Z`` has a closed form
on both supported manifolds.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.interpolate import PchipInterpolator
from scipy.special import erf

from .errors import DegenerateFitError, GeometryError
from .manifold import ManifoldKind, get_manifold, symmetrize

SIGMA_BRACKET = (1e-4, 10.0)
RADIAL_KNOTS = 1024
MIN_ACCEPTANCE = 0.1

_SQRT2 = np.sqrt(2.0)
_SQRT_PI = np.sqrt(np.pi)


def log_normalization(kind, sigma):
    """Logarithm of the normalization factor Z(sigma)."""
    kind = ManifoldKind(kind)
    sigma = np.asarray(sigma, dtype=float)
    if np.any(sigma <= 0):
        raise ValueError("sigma must be positive")
    if kind is ManifoldKind.POINCARE_DISK:
        # Z = 2 pi sqrt(pi/2) sigma exp(sigma^2/2) erf(sigma/sqrt 2)
        return (np.log(2 * np.pi * np.sqrt(np.pi / 2)) + np.log(sigma)
                + 0.5 * sigma**2 + np.log(erf(sigma / _SQRT2)))
    # Z = (2 pi)^{3/2} sqrt(pi) sigma^2 exp(sigma^2/4) erf(sigma/2); the
    # sqrt(pi) makes the density integrate to one against the volume of
    # tr((Y^-1 dY)^2), giving Z ~ (2 pi)^{3/2} sigma^3 as sigma -> 0
    return (1.5 * np.log(2 * np.pi) + 0.5 * np.log(np.pi) + 2 * np.log(sigma)
            + 0.25 * sigma**2 + np.log(erf(sigma / 2)))


def normalization(kind, sigma):
    """Normalization factor Z(sigma) of the Riemannian Gaussian."""
    return np.exp(log_normalization(kind, sigma))


def dispersion_moment(kind, sigma):
    """Expected squared distance to the mean, ``sigma^3 d/dsigma log Z``.

    Monotone increasing in sigma; this is the function inverted by the
    maximum-likelihood dispersion estimate.
    """
    kind = ManifoldKind(kind)
    s = np.asarray(sigma, dtype=float)
    if kind is ManifoldKind.POINCARE_DISK:
        tail = np.sqrt(2 / np.pi) * np.exp(-0.5 * s**2) / erf(s / _SQRT2)
        return s**2 + s**4 + s**3 * tail
    tail = np.exp(-0.25 * s**2) / (_SQRT_PI * erf(s / 2))
    return 2 * s**2 + 0.5 * s**4 + s**3 * tail


def solve_dispersion(kind, target, bracket=SIGMA_BRACKET, tol=1e-10):
    """Bisection for sigma with ``dispersion_moment(sigma) == target``.

    Raises ``ValueError`` when the root is not bracketed; callers decide how
    to report the degenerate side.
    """
    lo, hi = bracket
    f_lo = dispersion_moment(kind, lo) - target
    f_hi = dispersion_moment(kind, hi) - target
    if f_lo > 0 or f_hi < 0:
        side = "below" if f_lo > 0 else "above"
        raise ValueError(f"dispersion root {side} bracket [{lo}, {hi}]")
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if dispersion_moment(kind, mid) < target:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


# ---------------------------------------------------------------------------
# radial samplers


def _disk_radial_cdf(r, sigma):
    """Unnormalized CDF of the density exp(-r^2/2 s^2) sinh(r) on r >= 0."""
    c = sigma * _SQRT2
    s2 = sigma * sigma
    return 0.5 * (erf((r - s2) / c) - erf((r + s2) / c)) + erf(sigma / _SQRT2)


def _disk_inverse_cdf(sigma):
    r_max = sigma * sigma + 12.0 * sigma
    r = np.linspace(0.0, r_max, RADIAL_KNOTS)
    cdf = _disk_radial_cdf(r, sigma) / erf(sigma / _SQRT2)
    # interpolate in sqrt(F): smooth at r = 0 where F ~ r^2
    u = np.sqrt(np.clip(cdf, 0.0, 1.0))
    u[-1] = 1.0
    prev_max = np.maximum.accumulate(np.concatenate([[-1.0], u[:-1]]))
    keep = u > prev_max
    return PchipInterpolator(u[keep], r[keep])


def _sample_disk_radius(sigma, n, rng):
    inv = _disk_inverse_cdf(sigma)
    return inv(np.sqrt(rng.random(n)))


def _sinh_radial_rejection(sigma, a, n, rng):
    """Draw u > 0 with density proportional to exp(-u^2/2 sigma^2) sinh(a u).

    Two exact envelopes are available and the one with the higher acceptance
    rate is used:

    * ``a u exp(-u^2 / 2 s^2)`` with ``1/s^2 = 1/sigma^2 - a^2/3`` (a Rayleigh
      law), valid because ``sinh(x)/x <= exp(x^2/6)``; good for small sigma.
    * the folded normal ``|N(a sigma^2, sigma^2)|``, accepting with
      probability ``tanh(a u)``; good for large sigma.
    """
    mass = sigma * np.sqrt(np.pi / 2) * np.exp(0.5 * (a * sigma) ** 2) * erf(a * sigma / _SQRT2)
    inv_s2 = 1.0 / sigma**2 - a * a / 3.0
    rate_rayleigh = mass * inv_s2 / a if inv_s2 > 0 else 0.0
    rate_folded = float(erf(a * sigma / _SQRT2))
    use_rayleigh = rate_rayleigh >= rate_folded
    rate = rate_rayleigh if use_rayleigh else rate_folded
    assert rate > MIN_ACCEPTANCE, f"radial rejection acceptance {rate:.3f} too low"

    out = np.empty(n)
    filled = 0
    while filled < n:
        batch = int((n - filled) / rate * 1.2) + 16
        if use_rayleigh:
            u = np.sqrt(-2.0 * np.log1p(-rng.random(batch)) / inv_s2)
            x = a * u
            with np.errstate(over="ignore"):
                accept = np.where(x > 0, np.sinh(x) / np.where(x > 0, x, 1.0), 1.0)
            accept *= np.exp(-x * x / 6.0)
        else:
            u = np.abs(rng.normal(a * sigma**2, sigma, batch))
            accept = np.tanh(a * u)
        u = u[rng.random(batch) < accept]
        take = min(len(u), n - filled)
        out[filled:filled + take] = u[:take]
        filled += take
    return out


def _rotations(theta):
    c, s = np.cos(theta), np.sin(theta)
    rot = np.empty(theta.shape + (2, 2))
    rot[..., 0, 0] = c
    rot[..., 0, 1] = -s
    rot[..., 1, 0] = s
    rot[..., 1, 1] = c
    return rot


def sample_at_origin(kind, sigma, n, rng):
    """Draw ``n`` points from the Gaussian centered at the origin/identity."""
    kind = ManifoldKind(kind)
    if kind is ManifoldKind.POINCARE_DISK:
        r = _sample_disk_radius(sigma, n, rng)
        theta = rng.uniform(0.0, 2 * np.pi, n)
        return np.tanh(0.5 * r) * np.exp(1j * theta)
    # eigenvalue logs (r1, r2) rotated by 45 degrees: w is Gaussian, u carries
    # the sinh(|r1 - r2| / 2) volume factor
    u = _sinh_radial_rejection(sigma, 1.0 / _SQRT2, n, rng)
    u *= rng.choice([-1.0, 1.0], n)
    w = rng.normal(0.0, sigma, n)
    r1 = (w + u) / _SQRT2
    r2 = (w - u) / _SQRT2
    rot = _rotations(rng.uniform(0.0, 2 * np.pi, n))
    diag = np.zeros((n, 2, 2))
    diag[:, 0, 0] = np.exp(r1)
    diag[:, 1, 1] = np.exp(r2)
    return symmetrize(rot @ diag @ np.swapaxes(rot, -1, -2))


@dataclass(frozen=True, eq=False)
class RiemannianGaussian:
    """Isotropic Gaussian with a manifold-valued mean and scalar dispersion."""

    kind: ManifoldKind
    mean: np.ndarray
    sigma: float

    def __post_init__(self):
        object.__setattr__(self, "kind", ManifoldKind(self.kind))
        if not self.sigma > 0:
            raise ValueError(f"sigma must be positive, got {self.sigma}")
        mean = get_manifold(self.kind).validate(self.mean)
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "sigma", float(self.sigma))

    @property
    def manifold(self):
        return get_manifold(self.kind)

    def log_density(self, y):
        d = self.manifold.dist(self.mean, y)
        return -0.5 * (d / self.sigma) ** 2 - log_normalization(self.kind, self.sigma)

    def density(self, y):
        return np.exp(self.log_density(y))

    def sample(self, n, rng):
        if n < 1:
            raise ValueError("sample size must be at least 1")
        pts = sample_at_origin(self.kind, self.sigma, n, rng)
        return self.manifold.translate(self.mean, pts)

    def to_dict(self):
        coords = self.manifold.to_coords(self.mean)
        return {"mean": [float(x) for x in coords], "sigma": self.sigma}

    @classmethod
    def from_dict(cls, kind, data):
        mean = get_manifold(kind).from_coords(np.asarray(data["mean"], dtype=float))
        return cls(kind, mean, float(data["sigma"]))

    def __repr__(self):
        coords = np.round(self.manifold.to_coords(self.mean), 4).tolist()
        return f"RiemannianGaussian({self.kind.value}, mean={coords}, sigma={self.sigma:.4g})"


def fit_mle(kind, points, weights=None, init=None, bracket=SIGMA_BRACKET):
    """Weighted maximum-likelihood estimate of (mean, sigma).

    The mean is the weighted Karcher mean; sigma solves
    ``dispersion_moment(sigma) = weighted mean of d^2(y_i, mean)``.

    Raises
    ------
    DegenerateFitError
        If the dispersion root lies outside ``bracket``. The error carries the
        fit clamped to the violated bracket end as ``.gaussian``.
    """
    kind = ManifoldKind(kind)
    manifold = get_manifold(kind)
    points = np.asarray(points)
    if len(points) == 0:
        raise GeometryError("fit_mle needs at least one point")
    w = np.ones(len(points)) if weights is None else np.asarray(weights, dtype=float)
    if w.sum() <= 0:
        raise ValueError("weights must have a positive sum")
    w = w / w.sum()
    mean = manifold.karcher_mean(points, w, init=init)
    d = manifold.dist(mean, points)
    target = float(np.dot(w, d * d))
    try:
        sigma = solve_dispersion(kind, target, bracket)
    except ValueError as exc:
        low = dispersion_moment(kind, bracket[0]) > target
        clamped = RiemannianGaussian(kind, mean, bracket[0] if low else bracket[1])
        raise DegenerateFitError(f"degenerate data: {exc}", gaussian=clamped) from None
    return RiemannianGaussian(kind, mean, sigma)
