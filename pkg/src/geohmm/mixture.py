"""Expectation-maximization for mixtures of Riemannian Gaussians."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
from scipy.special import logsumexp

from .errors import ComponentCollapseError, DegenerateFitError, GeohmmError
from .manifold import ManifoldKind, check_same_kind, get_manifold
from .rgauss import SIGMA_BRACKET, RiemannianGaussian, dispersion_moment, fit_mle, solve_dispersion

log = logging.getLogger(__name__)


@dataclass
class MixtureConfig:
    restarts: int = 5
    max_iter: int = 500
    rel_tol: float = 1e-7
    sigma_floor: float = 1e-3
    min_weight: float = 1e-6


@dataclass(eq=False)
class MixtureModel:
    weights: np.ndarray
    components: list
    loglik_history: list = field(default_factory=list)
    n_iter: int = 0
    converged: bool = True

    def __post_init__(self):
        self.weights = np.asarray(self.weights, dtype=float)
        if len(self.weights) != len(self.components):
            raise ValueError("one weight per component required")
        if np.any(self.weights < 0) or abs(self.weights.sum() - 1.0) > 1e-9:
            raise ValueError("mixture weights must lie on the simplex")
        check_same_kind(*(c.kind for c in self.components))

    @property
    def n_components(self):
        return len(self.components)

    @property
    def kind(self) -> ManifoldKind:
        return self.components[0].kind

    @property
    def manifold(self):
        return get_manifold(self.kind)

    def log_joint(self, y):
        """``log w_i + log p_i(y)`` with shape ``(n_points, n_components)``."""
        with np.errstate(divide="ignore"):
            logw = np.log(self.weights)
        return np.stack([c.log_density(y) for c in self.components], axis=-1) + logw

    def loglik(self, y):
        return float(np.sum(logsumexp(self.log_joint(y), axis=-1)))

    def permute(self, perm):
        """Return the mixture with component ``k`` taken from ``perm[k]``."""
        perm = list(perm)
        return MixtureModel(self.weights[perm], [self.components[p] for p in perm],
                            list(self.loglik_history), self.n_iter, self.converged)

    def to_dict(self):
        return {
            "manifold": self.kind.value,
            "weights": self.weights.tolist(),
            "components": [c.to_dict() for c in self.components],
            "n_iter": int(self.n_iter),
            "converged": bool(self.converged),
            "loglik_history": [float(v) for v in self.loglik_history],
        }

    @classmethod
    def from_dict(cls, data):
        kind = ManifoldKind(data["manifold"])
        comps = [RiemannianGaussian.from_dict(kind, c) for c in data["components"]]
        return cls(np.asarray(data["weights"], dtype=float), comps,
                   list(data.get("loglik_history", [])), int(data.get("n_iter", 0)),
                   bool(data.get("converged", True)))


def _normalize_log(lj):
    return np.exp(lj - logsumexp(lj, axis=-1, keepdims=True))


def responsibilities(model: MixtureModel, y):
    """Posterior component probabilities, computed in log space."""
    r = _normalize_log(model.log_joint(y))
    return r / r.sum(axis=-1, keepdims=True)


def _m_step(kind, y, resp, previous, config):
    manifold = get_manifold(kind)
    mass = resp.sum(axis=0)
    weights = mass / mass.sum()
    comps = []
    for i, old in enumerate(previous.components):
        w = resp[:, i]
        if mass[i] <= 0:
            raise ComponentCollapseError(f"component {i} has no responsibility mass", i)
        mean = manifold.karcher_mean(y, w, init=old.mean)
        d = manifold.dist(mean, y)
        target = float(np.dot(w, d * d) / mass[i])
        if dispersion_moment(kind, config.sigma_floor) >= target:
            sigma = config.sigma_floor
        else:
            sigma = solve_dispersion(kind, target, (config.sigma_floor, SIGMA_BRACKET[1]))
        comps.append(RiemannianGaussian(kind, mean, sigma))
    return MixtureModel(weights, comps)


def _check_collapse(model, config):
    for i, (w, c) in enumerate(zip(model.weights, model.components)):
        if w < config.min_weight:
            raise ComponentCollapseError(f"component {i} collapsed (weight {w:.2e})", i)
        if c.sigma <= config.sigma_floor * (1 + 1e-9):
            raise ComponentCollapseError(f"component {i} collapsed (sigma at floor {c.sigma:.2e})", i)


def run_em(y, init: MixtureModel, config: MixtureConfig | None = None):
    """Run EM from ``init`` until the relative log-likelihood gain is small."""
    config = config or MixtureConfig()
    kind = init.kind
    model = init
    lj = model.log_joint(y)
    ll = float(np.sum(logsumexp(lj, axis=-1)))
    history = [ll]
    converged = False
    it = 0
    for it in range(1, config.max_iter + 1):
        resp = _normalize_log(lj)
        model = _m_step(kind, y, resp, model, config)
        lj = model.log_joint(y)
        new_ll = float(np.sum(logsumexp(lj, axis=-1)))
        history.append(new_ll)
        gain = new_ll - ll
        ll = new_ll
        if gain < config.rel_tol * abs(ll):
            converged = True
            break
    model.loglik_history = history
    model.n_iter = it
    model.converged = converged
    _check_collapse(model, config)
    return model


def kmeanspp_init(y, n_components, kind, rng, config: MixtureConfig | None = None):
    """Seed with k-means++ using Riemannian distances, then fit each cluster."""
    config = config or MixtureConfig()
    manifold = get_manifold(kind)
    n = len(y)
    centers = [int(rng.integers(n))]
    d2 = manifold.dist(y[centers[0]], y) ** 2
    for _ in range(1, n_components):
        total = d2.sum()
        if total <= 0:
            idx = int(rng.integers(n))
        else:
            idx = int(rng.choice(n, p=d2 / total))
        centers.append(idx)
        d2 = np.minimum(d2, manifold.dist(y[idx], y) ** 2)
    dists = np.stack([manifold.dist(y[c], y) for c in centers], axis=1)
    label = np.argmin(dists, axis=1)
    comps = []
    for i, c in enumerate(centers):
        members = y[label == i]
        try:
            g = fit_mle(kind, members, init=y[c], bracket=(config.sigma_floor, SIGMA_BRACKET[1]))
        except DegenerateFitError as exc:
            g = exc.gaussian
        comps.append(g)
    return MixtureModel(np.full(n_components, 1.0 / n_components), comps)


def fit_mixture(observations, n_components, kind, config=None, rng=None, init=None):
    """Fit an ``n_components`` Riemannian Gaussian mixture by EM.

    Without ``init``, runs ``config.restarts`` k-means++ seeded EM runs and
    keeps the one with the highest final log-likelihood. With ``init``, a
    single EM run starts from that model.
    """
    config = config or MixtureConfig()
    kind = ManifoldKind(kind)
    y = get_manifold(kind).validate(observations)
    if n_components < 1:
        raise ValueError("n_components must be at least 1")
    if len(y) < n_components:
        raise ValueError(f"need at least {n_components} observations, got {len(y)}")
    if init is not None:
        return run_em(y, init, config)
    if n_components == 1:
        g = fit_mle(kind, y)
        model = MixtureModel(np.ones(1), [g])
        model.loglik_history = [model.loglik(y)]
        return model

    rng = np.random.default_rng() if rng is None else rng
    best = None
    first_error = None
    for r in range(config.restarts):
        try:
            start = kmeanspp_init(y, n_components, kind, rng, config)
            model = run_em(y, start, config)
        except GeohmmError as exc:
            log.info("EM restart %d failed: %s", r, exc)
            first_error = first_error or exc
            continue
        log.debug("EM restart %d: loglik %.6f after %d iterations", r,
                  model.loglik_history[-1], model.n_iter)
        if best is None or model.loglik_history[-1] > best.loglik_history[-1]:
            best = model
    if best is None:
        raise first_error
    return best
