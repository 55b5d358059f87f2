"""Method-of-moments learning pipelines, component alignment and metrics.

Stage 1 (``learn_full`` only) fits a Riemannian Gaussian mixture to the
pooled observations. Stage 2 treats the resulting Gaussians as a known sensor:
it estimates ``K`` and the lagged kernel moments, then

1. matches lag 0 for the stationary distribution, ``A(0) = diag(pi)``;
2. for each lag, matches ``H(tau) ~ K^T A(tau-1) P(tau) K`` and sets
   ``A(tau) = A(tau-1) P(tau)``;
3. fits one transition matrix to the whole ``A`` sequence by stacked least
   squares.
"""

from __future__ import annotations

import itertools
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import linear_sum_assignment

from .errors import GeohmmError, StageError
from .hmm import HmmModel
from .manifold import ManifoldKind, check_same_kind, get_manifold
from .mixture import MixtureConfig, MixtureModel, fit_mixture
from .moments import (
    DEFAULT_MC_SAMPLES,
    EffectiveObservationMatrix,
    MomentSequence,
    combine_moments,
    effective_obs_matrix,
    empirical_h_from_likelihoods,
    empirical_m2,
    likelihood_matrix,
)
from .optim import SolverConfig, solve_lag, solve_stacked, solve_stationary
from .rgauss import RiemannianGaussian

METRIC_NAMES = (
    "mean_error",
    "dispersion_error",
    "transition_error",
    "relative_transition_error",
    "mean_abs_entry_error",
)


@dataclass
class LearnConfig:
    tau_bar: int = 1
    mc_samples: int = DEFAULT_MC_SAMPLES
    mixture: MixtureConfig = field(default_factory=MixtureConfig)
    solver: SolverConfig = field(default_factory=SolverConfig)
    burn_in: int = 0
    seed: int | None = 0
    threads: int = 1

    def __post_init__(self):
        if self.tau_bar < 1:
            raise ValueError("tau_bar must be at least 1")

    def streams(self):
        """Independent generators for stage 1 (mixture) and stage 2 (K)."""
        mix, kmat = np.random.SeedSequence(self.seed).spawn(2)
        return np.random.default_rng(mix), np.random.default_rng(kmat)


@dataclass
class TransitionEstimate:
    pi_hat: np.ndarray
    A: list
    P_lags: list
    P_hat: np.ndarray
    flags: dict


def estimate_transitions(moments: MomentSequence, C, solver: SolverConfig | None = None):
    """Run the three moment-matching stages on a moment sequence.

    ``C`` is the effective observation matrix ``K`` for kernel moments, or the
    ``N x Y`` observation matrix ``B`` for discrete pair frequencies.
    """
    solver = solver or SolverConfig()
    if moments.tau_bar < 1:
        raise ValueError("need at least one lag")
    flags = {}
    try:
        res = solve_stationary(np.diag(moments[0]), C, solver)
    except GeohmmError as exc:
        raise StageError("stationary", exc) from exc
    flags["stationary"] = res.flags
    pi_hat = res.x
    A = [np.diag(pi_hat)]
    P_lags = []
    for tau in range(1, moments.tau_bar + 1):
        try:
            res = solve_lag(moments[tau], C, A[-1], solver)
        except GeohmmError as exc:
            raise StageError(f"lag {tau}", exc) from exc
        flags[f"lag{tau}"] = res.flags
        P_lags.append(res.x)
        A.append(A[-1] @ res.x)
    try:
        res = solve_stacked(A, solver)
    except GeohmmError as exc:
        raise StageError("stacked", exc) from exc
    flags["stacked"] = res.flags
    return TransitionEstimate(pi_hat, A, P_lags, res.x, flags)


def learn_discrete(symbol_chains, B, tau_bar, solver=None):
    """Known-sensor learner for a finite observation alphabet.

    ``B`` is the ``N x Y`` row-stochastic observation matrix; symbols are
    zero-based.
    """
    B = check_row_stochastic_rect(B)
    chains = _as_list(symbol_chains)
    moments = combine_moments(empirical_m2(c, B.shape[1], tau_bar) for c in chains)
    return estimate_transitions(moments, B, solver)


def check_row_stochastic_rect(B):
    B = np.asarray(B, dtype=float)
    if B.ndim != 2 or np.any(B < 0) or np.abs(B.sum(axis=1) - 1).max() > 1e-12:
        raise ValueError("observation matrix must be row-stochastic")
    return B


def _as_list(chains):
    if isinstance(chains, (list, tuple)):
        return list(chains)
    return [chains]


def as_chains(observations, kind):
    """Normalize one observation array or a list of chains to validated arrays."""
    manifold = get_manifold(kind)
    if isinstance(observations, (list, tuple)):
        return [manifold.validate(c) for c in observations]
    return [manifold.validate(observations)]


@dataclass(eq=False)
class LearnReport:
    """Everything a learning run produced.

    Estimates are stored unaligned; ``alignment`` and ``metrics`` are filled
    by ``evaluate`` when a ground-truth model is available.
    """

    mixture: MixtureModel
    P_hat: np.ndarray
    pi_hat: np.ndarray
    A: list
    P_lags: list
    tau_bar: int
    K: EffectiveObservationMatrix
    moments: MomentSequence
    known_sensor: bool
    n_observations: int
    solver_flags: dict = field(default_factory=dict)
    runtimes: dict = field(default_factory=dict)
    seed: int | None = None
    alignment: list | None = None
    metrics: dict | None = None

    @property
    def kind(self):
        return self.mixture.kind

    @property
    def components(self):
        return self.mixture.components

    def aligned_P(self):
        if self.alignment is None:
            return self.P_hat
        p = self.alignment
        return self.P_hat[np.ix_(p, p)]

    def to_dict(self):
        out = {
            "manifold": self.kind.value,
            "tau_bar": self.tau_bar,
            "known_sensor": self.known_sensor,
            "n_observations": self.n_observations,
            "seed": self.seed,
            "mixture": self.mixture.to_dict(),
            "P_hat": self.P_hat.tolist(),
            "pi_hat": self.pi_hat.tolist(),
            "A": [a.tolist() for a in self.A],
            "P_lags": [p.tolist() for p in self.P_lags],
            "K": self.K.to_dict(),
            "moments": self.moments.to_dict(),
            "diagnostics": {
                "K_condition": self.K.condition,
                "K_min_eigenvalue": self.K.min_eigenvalue,
                "solver_flags": self.solver_flags,
                "runtimes": self.runtimes,
                "mixture_iterations": self.mixture.n_iter,
                "mixture_converged": self.mixture.converged,
            },
        }
        if self.alignment is not None:
            p = self.alignment
            out["alignment"] = list(p)
            out["aligned"] = {
                "P_hat": self.aligned_P().tolist(),
                "pi_hat": self.pi_hat[p].tolist(),
                "components": [self.components[i].to_dict() for i in p],
            }
        if self.metrics is not None:
            out["metrics"] = dict(self.metrics)
        return out

    @classmethod
    def from_dict(cls, data):
        diag = data.get("diagnostics", {})
        return cls(
            mixture=MixtureModel.from_dict(data["mixture"]),
            P_hat=np.asarray(data["P_hat"], dtype=float),
            pi_hat=np.asarray(data["pi_hat"], dtype=float),
            A=[np.asarray(a, dtype=float) for a in data["A"]],
            P_lags=[np.asarray(p, dtype=float) for p in data["P_lags"]],
            tau_bar=int(data["tau_bar"]),
            K=EffectiveObservationMatrix.from_dict(data["K"]),
            moments=MomentSequence.from_dict(data["moments"]),
            known_sensor=bool(data["known_sensor"]),
            n_observations=int(data["n_observations"]),
            solver_flags=diag.get("solver_flags", {}),
            runtimes=diag.get("runtimes", {}),
            seed=data.get("seed"),
            alignment=data.get("alignment"),
            metrics=data.get("metrics"),
        )


def kernel_moments(chains, components, tau_bar, threads=1):
    """Kernel moments pooled over chains (lag tau weighted by D_c - tau)."""
    def one(chain):
        return empirical_h_from_likelihoods(likelihood_matrix(chain, components), tau_bar)

    if threads > 1 and len(chains) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            seqs = list(pool.map(one, chains))
    else:
        seqs = [one(c) for c in chains]
    return combine_moments(seqs)


def learn_known_sensor(observations, components, config: LearnConfig | None = None,
                       K: EffectiveObservationMatrix | None = None, weights=None,
                       moments: MomentSequence | None = None):
    """Estimate the transition matrix with the observation densities fixed.

    ``observations`` is one chain or a list of chains. ``K`` may be passed
    in to reuse an earlier estimate; otherwise it is sampled from the stage-2
    stream of ``config.seed``. Passing ``moments`` (lags ``0..tau_bar``)
    skips the empirical stage, and ``observations`` may then be ``None``.
    """
    config = config or LearnConfig()
    components = list(components)
    check_same_kind(*(c.kind for c in components))
    kind = components[0].kind
    if moments is None:
        chains = as_chains(observations, kind)
        n_obs = sum(len(c) for c in chains)
        shortest = min(len(c) for c in chains)
        if shortest <= config.tau_bar:
            raise ValueError(f"each chain needs more than tau_bar={config.tau_bar} observations")
    else:
        n_obs = 0
    if moments is not None and moments.tau_bar != config.tau_bar:
        raise ValueError(f"moments hold lags up to {moments.tau_bar}, config asks for {config.tau_bar}")
    runtimes = {}
    t0 = time.perf_counter()
    if K is None:
        _, k_rng = config.streams()
        try:
            K = effective_obs_matrix(components, config.mc_samples, k_rng)
        except GeohmmError as exc:
            raise StageError("effective observation matrix", exc) from exc
    t1 = time.perf_counter()
    if moments is None:
        moments = kernel_moments(chains, components, config.tau_bar, config.threads)
    t2 = time.perf_counter()
    est = estimate_transitions(moments, K.K, config.solver)
    t3 = time.perf_counter()
    runtimes.update(K=t1 - t0, moments=t2 - t1, matching=t3 - t2)
    n = len(components)
    mix_w = np.full(n, 1.0 / n) if weights is None else np.asarray(weights, dtype=float)
    mixture = MixtureModel(mix_w, components)
    return LearnReport(
        mixture=mixture,
        P_hat=est.P_hat,
        pi_hat=est.pi_hat,
        A=est.A,
        P_lags=est.P_lags,
        tau_bar=config.tau_bar,
        K=K,
        moments=moments,
        known_sensor=True,
        n_observations=n_obs,
        solver_flags=est.flags,
        runtimes=runtimes,
        seed=config.seed,
    )


def learn_full(observations, n_states, kind, config: LearnConfig | None = None,
               mixture: MixtureModel | None = None):
    """Two-stage learner: mixture estimation, then known-sensor matching.

    Passing a previously fitted ``mixture`` skips stage 1; the stage-2 result
    is the same as for a fresh run with the same seed.
    """
    config = config or LearnConfig()
    kind = ManifoldKind(kind)
    chains = as_chains(observations, kind)
    t0 = time.perf_counter()
    if mixture is None:
        mix_rng, _ = config.streams()
        pooled = np.concatenate(chains)
        try:
            mixture = fit_mixture(pooled, n_states, kind, config.mixture, mix_rng)
        except GeohmmError as exc:
            raise StageError("mixture", exc) from exc
    t1 = time.perf_counter()
    report = learn_known_sensor(chains, mixture.components, config, weights=mixture.weights)
    report.mixture = mixture
    report.known_sensor = False
    report.runtimes["mixture"] = t1 - t0
    return report


# ---------------------------------------------------------------------------
# alignment and metrics


def align_components(truth, estimate):
    """Optimal assignment of estimated to true components.

    Returns ``perm`` with ``perm[i]`` the estimated component matched to true
    component ``i``, minimizing the summed squared distance between means.
    Accepts ``HmmModel``, ``MixtureModel``, ``LearnReport`` or plain lists of
    ``RiemannianGaussian``.
    """
    t = _components_of(truth)
    e = _components_of(estimate)
    if len(t) != len(e):
        raise ValueError(f"component counts differ: {len(t)} vs {len(e)}")
    cost = assignment_cost(t, e)
    rows, cols = linear_sum_assignment(cost)
    perm = np.empty(len(t), dtype=int)
    perm[rows] = cols
    return perm.tolist()


def assignment_cost(truth_components, est_components):
    manifold = get_manifold(truth_components[0].kind)
    return np.array([[float(manifold.dist(a.mean, b.mean)) ** 2 for b in est_components]
                     for a in truth_components])


def brute_force_alignment(truth, estimate):
    """Exhaustive version of ``align_components`` (for small N)."""
    cost = assignment_cost(_components_of(truth), _components_of(estimate))
    n = len(cost)
    best = min(itertools.permutations(range(n)), key=lambda p: sum(cost[i, p[i]] for i in range(n)))
    return list(best)


def _components_of(obj):
    if isinstance(obj, (HmmModel, MixtureModel, LearnReport)):
        return list(obj.components)
    return list(obj)


def compute_metrics(truth: HmmModel, estimate: LearnReport, perm=None):
    """Error metrics after aligning ``estimate`` to ``truth``.

    ``mean_error`` is ``sqrt(sum_i d^2(mean_i, mean_hat_i))``,
    ``dispersion_error`` the Euclidean norm of the sigma differences, and the
    transition errors are the Frobenius error, its ratio to ``||P||_F`` and
    the average absolute entry error.
    """
    if perm is None:
        perm = align_components(truth, estimate)
    manifold = truth.manifold
    est = [estimate.components[i] for i in perm]
    d2 = sum(float(manifold.dist(t.mean, e.mean)) ** 2 for t, e in zip(truth.components, est))
    ds = np.array([t.sigma - e.sigma for t, e in zip(truth.components, est)])
    P = truth.P
    P_hat = estimate.P_hat[np.ix_(perm, perm)]
    diff = P - P_hat
    fro = float(np.linalg.norm(diff))
    return {
        "mean_error": float(np.sqrt(d2)),
        "dispersion_error": float(np.linalg.norm(ds)),
        "transition_error": fro,
        "relative_transition_error": fro / float(np.linalg.norm(P)),
        "mean_abs_entry_error": float(np.abs(diff).mean()),
    }


def evaluate(report: LearnReport, truth: HmmModel):
    """Align ``report`` to ``truth`` and attach the metrics; returns them."""
    if truth.n_states != len(report.components):
        raise ValueError(
            f"state count mismatch: truth has {truth.n_states}, report has {len(report.components)}"
        )
    check_same_kind(truth.kind, report.kind)
    perm = align_components(truth, report)
    report.alignment = perm
    report.metrics = compute_metrics(truth, report, perm)
    return report.metrics


def report_from_truth(truth: HmmModel, tau_bar=1):
    """A report whose estimates equal the true model (for checking plumbing)."""
    n = truth.n_states
    pi = truth.stationary()
    A = [np.diag(pi)]
    for _ in range(tau_bar):
        A.append(A[-1] @ truth.P)
    K = EffectiveObservationMatrix(np.eye(n), np.zeros((n, n)), 0)
    moments = MomentSequence(np.zeros((tau_bar + 1, n, n)), np.zeros(tau_bar + 1, dtype=np.int64))
    return LearnReport(
        mixture=MixtureModel(pi, [RiemannianGaussian(c.kind, c.mean, c.sigma) for c in truth.components]),
        P_hat=truth.P.copy(), pi_hat=pi, A=A, P_lags=[truth.P.copy()] * tau_bar,
        tau_bar=tau_bar, K=K, moments=moments, known_sensor=True, n_observations=0,
    )
