"""Simplex- and row-stochastic-constrained least squares.

Three problem shapes occur in moment matching, all of the form
``min ||L(X) - T||_F^2`` over a product of probability simplices:

``diag``     ``L(pi) = C^T pi`` over the simplex (stationary distribution),
``lag``      ``L(P) = C^T A P C`` over row-stochastic ``P``,
``stacked``  ``L(P) = G P`` with ``G`` the stacked lag matrices.

They are solved by a monotone accelerated projected-gradient method (MFISTA)
with step ``1/Lip``; every accepted iterate is a projection image and so is
exactly feasible, and the accepted objective sequence never increases. The
run stops once the objective fails to drop by a relative ``tol`` over a
window of ten iterations.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

CONDITION_WARN = 1e10


class ObjectiveKind(str, Enum):
    DIAG_MATCH = "diag"
    LAG_MATCH = "lag"
    STACKED_MATCH = "stacked"


class ConstraintKind(str, Enum):
    SIMPLEX_VECTOR = "simplex"
    ROW_STOCHASTIC = "row_stochastic"


# largest unknown count for which the dense least-squares warm start is built
MAX_DENSE_UNKNOWNS = 400


@dataclass
class SolverConfig:
    max_iters: int = 50_000
    tol: float = 1e-12
    power_iters: int = 100
    record: bool = False

    def __post_init__(self):
        if not self.tol > 0:
            raise ValueError("tol must be positive")
        if self.max_iters < 1:
            raise ValueError("max_iters must be at least 1")


@dataclass
class SolveResult:
    x: np.ndarray
    objective: float
    iterations: int
    converged: bool
    kkt_residual: float
    lipschitz: float
    condition: float = 1.0
    history: list = field(default_factory=list)

    @property
    def flags(self):
        out = []
        if not self.converged:
            out.append("max_iters")
        if self.condition > CONDITION_WARN:
            out.append("ill_conditioned")
        return out


class ConditioningWarning(UserWarning):
    """The matching problem has a (numerically) non-unique minimizer."""


def project_simplex(v):
    """Euclidean projection onto the probability simplex, row-wise.

    Works on a vector or on each row of a matrix (sort-based threshold).
    """
    v = np.asarray(v, dtype=float)
    n = v.shape[-1]
    u = np.sort(v, axis=-1)[..., ::-1]
    css = np.cumsum(u, axis=-1) - 1.0
    ind = np.arange(1, n + 1)
    rho = np.sum(u - css / ind > 0, axis=-1, keepdims=True)
    theta = np.take_along_axis(css, rho - 1, axis=-1) / rho
    return np.maximum(v - theta, 0.0)


@dataclass
class StochasticLsProblem:
    """Quadratic least-squares problem with its linear map and target."""

    kind: ObjectiveKind
    forward: object
    adjoint: object
    target: np.ndarray
    shape: tuple
    constraint: ConstraintKind

    def objective(self, x):
        r = self.forward(x) - self.target
        return float(np.sum(r * r))

    def gradient(self, x):
        return 2.0 * self.adjoint(self.forward(x) - self.target)

    def lipschitz(self, iters=100):
        """Upper bound on the gradient Lipschitz constant.

        Power iteration on ``adjoint(forward(.))`` from a fixed start, times
        two for the square, inflated by 1%.
        """
        x = np.random.default_rng(0).random(self.shape) + 0.5
        lam = 0.0
        for _ in range(iters):
            y = self.adjoint(self.forward(x))
            lam = np.linalg.norm(y)
            if lam == 0.0:
                break
            x = y / lam
        return 2.0 * lam * 1.01

    def uniform_start(self):
        n = self.shape[-1]
        return np.full(self.shape, 1.0 / n)

    def least_squares_start(self):
        """Projection of the unconstrained least-squares solution, or ``None``.

        The linear map is assembled column by column, so this is only tried
        for small problems.
        """
        size = int(np.prod(self.shape))
        if size > MAX_DENSE_UNKNOWNS:
            return None
        cols = []
        for k in range(size):
            e = np.zeros(size)
            e[k] = 1.0
            cols.append(np.ravel(self.forward(e.reshape(self.shape))))
        sol = np.linalg.lstsq(np.stack(cols, axis=1), np.ravel(self.target), rcond=None)[0]
        if not np.all(np.isfinite(sol)):
            return None
        return project_simplex(sol.reshape(self.shape))


def _solve(problem: StochasticLsProblem, config: SolverConfig, x0=None, condition=1.0):
    lip = problem.lipschitz(config.power_iters)
    if x0 is None:
        x = problem.uniform_start()
        ls = problem.least_squares_start()
        if ls is not None and problem.objective(ls) < problem.objective(x):
            x = ls
    else:
        x = project_simplex(x0)
    if lip == 0.0:
        return SolveResult(x, problem.objective(x), 0, True, 0.0, 0.0, condition)

    def kkt(z):
        step = project_simplex(z - problem.gradient(z) / lip)
        return float(np.linalg.norm(step - z))

    fx = problem.objective(x)
    history = [fx] if config.record else []
    y = x.copy()
    t = 1.0
    f_window = fx
    converged = False
    it = 0
    res = np.inf
    for it in range(1, config.max_iters + 1):
        z = project_simplex(y - problem.gradient(y) / lip)
        fz = problem.objective(z)
        if fz <= fx:
            x_new, f_new = z, fz
            t_new = 0.5 * (1.0 + np.sqrt(1.0 + 4.0 * t * t))
            y = x_new + (t / t_new) * (z - x_new) + ((t - 1.0) / t_new) * (x_new - x)
        else:
            # momentum overshot: keep x and restart acceleration from it
            x_new, f_new = x, fx
            t_new = 1.0
            y = x.copy()
        x, fx, t = x_new, f_new, t_new
        if config.record:
            history.append(fx)
        if fx == 0.0:
            res = 0.0
            converged = True
            break
        if it % 10 == 0:
            # a rejected momentum step is followed by a plain projected
            # gradient step, so a stalled window means stationarity
            if f_window - fx <= config.tol * fx:
                converged = True
                break
            f_window = fx
    if res != 0.0:
        res = kkt(x)
    return SolveResult(x, fx, it, converged, res, lip, condition, history)


def _condition(C):
    s = np.linalg.svd(np.atleast_2d(C), compute_uv=False)
    return float(s[0] / s[-1]) if s[-1] > 0 else np.inf


def _warn_condition(cond, what):
    if cond > CONDITION_WARN:
        warnings.warn(
            f"{what} is ill-conditioned (condition number {cond:.3g}); "
            "the minimizer may not be unique",
            ConditioningWarning,
            stacklevel=3,
        )


def stationary_problem(h0, C):
    h0 = np.asarray(h0, dtype=float)
    C = np.asarray(C, dtype=float)
    if h0.ndim == 2:
        h0 = np.diag(h0).copy()
    if C.shape[1] != len(h0):
        raise ValueError(f"dimension mismatch: C is {C.shape}, target has {len(h0)} entries")
    return StochasticLsProblem(
        ObjectiveKind.DIAG_MATCH,
        lambda p: C.T @ p,
        lambda r: C @ r,
        h0,
        (C.shape[0],),
        ConstraintKind.SIMPLEX_VECTOR,
    )


def solve_stationary(h0, C, config=None, x0=None):
    """Match ``diag(C^T pi)`` to the lag-0 moments over the simplex.

    ``h0`` may be the diagonal vector or the (diagonal) lag-0 matrix. ``C`` is
    the effective observation matrix K (N x N) or a discrete observation
    matrix B (N x Y).
    """
    config = config or SolverConfig()
    problem = stationary_problem(h0, C)
    cond = _condition(C)
    _warn_condition(cond, "observation matrix")
    return _solve(problem, config, x0, cond)


def lag_problem(H, C, A_prev):
    H = np.asarray(H, dtype=float)
    C = np.asarray(C, dtype=float)
    A = np.asarray(A_prev, dtype=float)
    n, m = C.shape
    if A.shape != (n, n) or H.shape != (m, m):
        raise ValueError(
            f"dimension mismatch: H {H.shape}, C {C.shape}, A_prev {A.shape}"
        )
    left = C.T @ A
    return StochasticLsProblem(
        ObjectiveKind.LAG_MATCH,
        lambda P: left @ P @ C,
        lambda R: left.T @ R @ C.T,
        H,
        (n, n),
        ConstraintKind.ROW_STOCHASTIC,
    )


def solve_lag(H, C, A_prev, config=None, x0=None):
    """Row-stochastic ``P`` minimizing ``||H - C^T A_prev P C||_F^2``."""
    config = config or SolverConfig()
    problem = lag_problem(H, C, A_prev)
    cond = _condition(np.asarray(C).T @ np.asarray(A_prev))
    _warn_condition(cond, "lag operator")
    return _solve(problem, config, x0, cond)


def stacked_problem(A_seq):
    A_seq = [np.asarray(a, dtype=float) for a in A_seq]
    if len(A_seq) < 2:
        raise ValueError("stacked matching needs A(0) and at least one lag")
    G = np.vstack(A_seq[:-1])
    T = np.vstack(A_seq[1:])
    n = G.shape[1]
    return StochasticLsProblem(
        ObjectiveKind.STACKED_MATCH,
        lambda P: G @ P,
        lambda R: G.T @ R,
        T,
        (n, n),
        ConstraintKind.ROW_STOCHASTIC,
    ), G


def solve_stacked(A_seq, config=None, x0=None):
    """Row-stochastic ``P`` minimizing ``||[A(0);..;A(t-1)] P - [A(1);..;A(t)]||``."""
    config = config or SolverConfig()
    problem, G = stacked_problem(A_seq)
    cond = _condition(G)
    _warn_condition(cond, "stacked lag system")
    return _solve(problem, config, x0, cond)
