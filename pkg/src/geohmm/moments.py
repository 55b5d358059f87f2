"""Lagged second-order moments.

Discrete alphabets use the pair-frequency matrices ``M2(tau)``; continuous
observations use the kernel analogue ``H(tau)``, built from observation
likelihoods, together with the effective observation matrix
``K_ij = int B_i(y) B_j(y) dv(y)``.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field

import numpy as np
from scipy.special import logsumexp

from .manifold import check_same_kind

DEFAULT_MC_SAMPLES = 100_000
PSD_TOL = 1e-10


@dataclass
class MomentSequence:
    """Lag matrices ``lags[tau]`` for tau = 0..tau_bar.

    ``counts[tau]`` is the number of pairs behind each lag (D - tau), kept so
    sequences from several chains can be pooled.
    """

    lags: np.ndarray
    counts: np.ndarray

    @property
    def tau_bar(self):
        return len(self.lags) - 1

    def __getitem__(self, tau):
        return self.lags[tau]

    def __len__(self):
        return len(self.lags)

    def to_dict(self):
        return {"tau_bar": self.tau_bar, "counts": self.counts.tolist(), "lags": self.lags.tolist()}

    @classmethod
    def from_dict(cls, data):
        return cls(np.asarray(data["lags"], dtype=float), np.asarray(data["counts"], dtype=np.int64))


def combine_moments(sequences):
    """Pool per-chain moment sequences, weighting lag tau by D_c - tau."""
    sequences = list(sequences)
    if not sequences:
        raise ValueError("nothing to combine")
    tau_bar = sequences[0].tau_bar
    if any(s.tau_bar != tau_bar for s in sequences):
        raise ValueError("all sequences must share tau_bar")
    counts = np.sum([s.counts for s in sequences], axis=0)
    weighted = np.sum([s.lags * s.counts[:, None, None] for s in sequences], axis=0)
    return MomentSequence(weighted / counts[:, None, None], counts)


# ---------------------------------------------------------------------------
# analytic moments


def _check_tau(tau):
    if tau < 0 or int(tau) != tau:
        raise ValueError(f"lag must be a nonnegative integer, got {tau}")
    return int(tau)


def analytic_m2(P, pi, B, tau):
    """``B^T diag(pi) P^tau B`` for tau >= 1 and ``diag(B^T pi)`` for tau = 0."""
    tau = _check_tau(tau)
    P = np.asarray(P, dtype=float)
    pi = np.asarray(pi, dtype=float)
    B = np.asarray(B, dtype=float)
    n = len(P)
    if P.shape != (n, n) or pi.shape != (n,) or B.shape[0] != n:
        raise ValueError(f"dimension mismatch: P {P.shape}, pi {pi.shape}, B {B.shape}")
    if tau == 0:
        return np.diag(B.T @ pi)
    return B.T @ (pi[:, None] * np.linalg.matrix_power(P, tau)) @ B


def analytic_h(P, pi, K, tau):
    """``diag(K pi)`` for tau = 0 and ``K^T diag(pi) P^tau K`` for tau >= 1."""
    tau = _check_tau(tau)
    P = np.asarray(P, dtype=float)
    pi = np.asarray(pi, dtype=float)
    K = np.asarray(K, dtype=float)
    n = len(P)
    if P.shape != (n, n) or pi.shape != (n,) or K.shape != (n, n):
        raise ValueError(f"dimension mismatch: P {P.shape}, pi {pi.shape}, K {K.shape}")
    if tau == 0:
        return np.diag(K @ pi)
    return K.T @ (pi[:, None] * np.linalg.matrix_power(P, tau)) @ K


def analytic_sequence(P, pi, C, tau_bar, continuous=True):
    fn = analytic_h if continuous else analytic_m2
    lags = np.array([fn(P, pi, C, t) for t in range(tau_bar + 1)])
    return MomentSequence(lags, np.ones(tau_bar + 1, dtype=np.int64))


# ---------------------------------------------------------------------------
# empirical moments


def empirical_m2(symbols, n_symbols, tau_bar):
    """Empirical lag-tau pair frequencies of a symbol sequence.

    ``symbols`` are zero-based labels in ``range(n_symbols)``. Lag tau divides
    the pair counts by ``D - tau``; lag 0 is the diagonal of symbol
    frequencies.
    """
    y = np.asarray(symbols)
    D = len(y)
    if D <= tau_bar:
        raise ValueError(f"need more than tau_bar={tau_bar} observations, got {D}")
    if y.size and (y.min() < 0 or y.max() >= n_symbols):
        raise ValueError(f"symbol out of range 0..{n_symbols - 1}")
    y = y.astype(np.int64)
    lags = np.zeros((tau_bar + 1, n_symbols, n_symbols))
    counts = D - np.arange(tau_bar + 1)
    lags[0] = np.diag(np.bincount(y, minlength=n_symbols) / D)
    for tau in range(1, tau_bar + 1):
        pairs = np.bincount(y[:-tau] * n_symbols + y[tau:], minlength=n_symbols**2)
        lags[tau] = pairs.reshape(n_symbols, n_symbols) / counts[tau]
    return MomentSequence(lags, counts)


def likelihood_matrix(observations, components):
    """``D x N`` matrix of observation likelihoods ``B(y_k | x = i)``."""
    check_same_kind(*(c.kind for c in components))
    return np.stack([c.density(observations) for c in components], axis=1)


def empirical_h_from_likelihoods(L, tau_bar):
    L = np.asarray(L, dtype=float)
    D, n = L.shape
    if D <= tau_bar:
        raise ValueError(f"need more than tau_bar={tau_bar} observations, got {D}")
    lags = np.zeros((tau_bar + 1, n, n))
    counts = D - np.arange(tau_bar + 1)
    lags[0] = np.diag(L.mean(axis=0))
    for tau in range(1, tau_bar + 1):
        lags[tau] = L[:-tau].T @ L[tau:] / counts[tau]
    return MomentSequence(lags, counts)


def empirical_h(observations, components, tau_bar):
    """Kernel moments ``H_hat(tau)`` of a single observation sequence."""
    return empirical_h_from_likelihoods(likelihood_matrix(observations, components), tau_bar)


# ---------------------------------------------------------------------------
# effective observation matrix


@dataclass
class EffectiveObservationMatrix:
    """Monte Carlo estimate of ``K`` with per-entry standard errors.

    ``raw`` holds the one-sided estimates ``mean_{y ~ B_i} B_j(y)`` before
    symmetrization, with their own standard errors in ``raw_std_err``.
    """

    K: np.ndarray
    std_err: np.ndarray
    mc_samples: int
    raw: np.ndarray = field(repr=False, default=None)
    raw_std_err: np.ndarray = field(repr=False, default=None)

    @property
    def min_eigenvalue(self):
        return float(np.linalg.eigvalsh(self.K)[0])

    @property
    def is_psd(self):
        return self.min_eigenvalue >= -PSD_TOL

    @property
    def condition(self):
        w = np.abs(np.linalg.eigvalsh(self.K))
        return float(w.max() / w.min()) if w.min() > 0 else np.inf

    def to_dict(self):
        return {
            "K": self.K.tolist(),
            "std_err": self.std_err.tolist(),
            "mc_samples": self.mc_samples,
        }

    @classmethod
    def from_dict(cls, data):
        return cls(np.asarray(data["K"]), np.asarray(data["std_err"]), int(data["mc_samples"]))


def _component_streams(components, rng):
    """One generator per component, keyed by the component's parameters.

    A single draw from ``rng`` is combined with a digest of (mean, sigma), so
    permuting the components permutes their sample sets and K exactly.
    """
    base = int(rng.integers(2**63))
    out = []
    for comp in components:
        coords = np.append(comp.manifold.to_coords(np.asarray(comp.mean)[None]).ravel(), comp.sigma)
        digest = hashlib.sha256(coords.astype("<f8").tobytes()).digest()
        key = [int.from_bytes(digest[k:k + 4], "little") for k in range(0, 16, 4)]
        out.append(np.random.default_rng(np.random.SeedSequence([base, *key])))
    return out


def effective_obs_matrix(components, mc_samples=DEFAULT_MC_SAMPLES, rng=None):
    """Estimate ``K_ij = int B_i B_j dv`` by sampling each component.

    Each component gets its own stream derived from ``rng`` and its parameters. Diagonal entries are
    plain averages of ``B_i`` over draws from ``B_i``. Off-diagonal entries
    pool the draws from both components and use the balance-heuristic
    estimator ``B_i B_j / ((B_i + B_j) / 2)``, which is symmetric in (i, j) by
    construction and stays well behaved when one of the two one-sided
    estimators is a rare-event average (a sharp component far from a wide
    one).
    """
    if mc_samples < 1000:
        raise ValueError("mc_samples must be at least 1000")
    components = list(components)
    check_same_kind(*(c.kind for c in components))
    rng = np.random.default_rng() if rng is None else rng
    n = len(components)
    streams = _component_streams(components, rng)
    # logB[s, k, j]: log density of component j at draw k of component s
    logB = np.empty((n, mc_samples, n))
    for s, (comp, stream) in enumerate(zip(components, streams)):
        pts = comp.sample(mc_samples, stream)
        for j, other in enumerate(components):
            logB[s, :, j] = other.log_density(pts)

    root_n = np.sqrt(mc_samples)
    raw = np.empty((n, n))
    raw_se = np.empty((n, n))
    for i in range(n):
        vals = np.exp(logB[i])
        raw[i] = vals.mean(axis=0)
        raw_se[i] = vals.std(axis=0, ddof=1) / root_n

    K = np.empty((n, n))
    se = np.empty((n, n))
    for i in range(n):
        K[i, i] = raw[i, i]
        se[i, i] = raw_se[i, i]
        for j in range(i + 1, n):
            halves = []
            variances = []
            for s in (i, j):
                li, lj = logB[s, :, i], logB[s, :, j]
                f = np.exp(li + lj - logsumexp(np.stack([li, lj]), axis=0) + np.log(2.0))
                halves.append(f.mean())
                variances.append(f.var(ddof=1) / mc_samples)
            K[i, j] = K[j, i] = 0.5 * (halves[0] + halves[1])
            se[i, j] = se[j, i] = 0.5 * np.sqrt(variances[0] + variances[1])
    return EffectiveObservationMatrix(K, se, mc_samples, raw, raw_se)
