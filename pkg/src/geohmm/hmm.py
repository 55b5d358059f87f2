"""HMM container, chain simulation and stationary distributions."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import GeohmmError
from .manifold import ManifoldKind, check_same_kind, get_manifold
from .rgauss import RiemannianGaussian

STOCHASTIC_TOL = 1e-12


class ChainError(GeohmmError, ValueError):
    """Transition matrix is not a valid (ergodic) stochastic matrix."""


def check_row_stochastic(P, tol=STOCHASTIC_TOL, name="P"):
    P = np.asarray(P, dtype=float)
    if P.ndim != 2 or P.shape[0] != P.shape[1]:
        raise ChainError(f"{name} must be square, got shape {P.shape}")
    if np.any(P < 0):
        raise ChainError(f"{name} has negative entries")
    dev = np.abs(P.sum(axis=1) - 1.0).max()
    if dev > tol:
        raise ChainError(f"{name} rows must sum to 1 (max deviation {dev:.3e})")
    return P


def check_simplex(p, tol=STOCHASTIC_TOL, name="distribution"):
    p = np.asarray(p, dtype=float)
    if p.ndim != 1 or np.any(p < 0) or abs(p.sum() - 1.0) > tol:
        raise ChainError(f"{name} must be a probability vector")
    return p


def stationary(P):
    """Stationary distribution of an irreducible aperiodic chain.

    Solves ``(P^T - I) pi = 0`` with the last equation replaced by
    ``sum(pi) = 1``. Chains with more than one eigenvalue on the unit circle
    (reducible or periodic) are rejected, since the limit is then either
    non-unique or not attained.
    """
    P = check_row_stochastic(P)
    n = len(P)
    unit = np.abs(np.linalg.eigvals(P)) > 1.0 - 1e-9
    if unit.sum() != 1:
        raise ChainError(
            f"chain is reducible or periodic ({int(unit.sum())} eigenvalues on the unit circle)"
        )
    A = P.T - np.eye(n)
    A[-1, :] = 1.0
    b = np.zeros(n)
    b[-1] = 1.0
    pi = np.linalg.solve(A, b)
    # one refinement step cleans up the last few ulps of residual
    r = b - A @ pi
    pi = pi + np.linalg.solve(A, r)
    pi = np.clip(pi, 0.0, None)
    return pi / pi.sum()


@dataclass(eq=False)
class HmmModel:
    """Transition matrix, initial distribution and Gaussian observation model."""

    P: np.ndarray
    pi0: np.ndarray
    components: list = field(default_factory=list)

    def __post_init__(self):
        self.P = check_row_stochastic(self.P)
        self.pi0 = check_simplex(self.pi0, name="pi0")
        if len(self.pi0) != len(self.P) or len(self.components) != len(self.P):
            raise ChainError("P, pi0 and components must agree on the number of states")
        check_same_kind(*(c.kind for c in self.components))

    @property
    def n_states(self):
        return len(self.P)

    @property
    def kind(self) -> ManifoldKind:
        return self.components[0].kind

    @property
    def manifold(self):
        return get_manifold(self.kind)

    def stationary(self):
        return stationary(self.P)

    def to_dict(self):
        return {
            "manifold": self.kind.value,
            "P": self.P.tolist(),
            "pi0": self.pi0.tolist(),
            "components": [c.to_dict() for c in self.components],
        }

    @classmethod
    def from_dict(cls, data):
        kind = ManifoldKind(data["manifold"])
        comps = [RiemannianGaussian.from_dict(kind, c) for c in data["components"]]
        return cls(np.asarray(data["P"], dtype=float), np.asarray(data["pi0"], dtype=float), comps)


def simulate_states(P, pi0, length, rng, burn_in=0):
    P = np.asarray(P, dtype=float)
    cum = np.cumsum(P, axis=1)
    cum[:, -1] = 1.0
    total = length + burn_in
    u = rng.random(total)
    states = np.empty(total, dtype=np.int64)
    x = int(np.searchsorted(np.cumsum(pi0), rng.random(), side="right"))
    x = min(x, len(P) - 1)
    states[0] = x
    rows = [c.tolist() for c in cum]
    for k in range(1, total):
        row = rows[x]
        uk = u[k]
        j = 0
        while row[j] <= uk:
            j += 1
        x = j
        states[k] = x
    return states[burn_in:]


def simulate(model: HmmModel, length, rng, burn_in=0):
    """Draw a state path and observations from the model.

    Returns ``(states, observations)`` with zero-based state labels. The
    first ``burn_in`` steps of the chain are discarded.
    """
    if length < 1:
        raise ValueError("length must be at least 1")
    states = simulate_states(model.P, model.pi0, length, rng, burn_in)
    kind = model.kind
    if kind is ManifoldKind.POINCARE_DISK:
        obs = np.empty(length, dtype=complex)
    else:
        obs = np.empty((length, 2, 2))
    for i, comp in enumerate(model.components):
        idx = np.flatnonzero(states == i)
        if len(idx):
            obs[idx] = comp.sample(len(idx), rng)
    return states, obs
