import numpy as np
import pytest

from geohmm.errors import StageError
from geohmm.experiments import simulate_chains
from geohmm.hmm import stationary, simulate_states
from geohmm.learner import (
    LearnConfig,
    LearnReport,
    align_components,
    assignment_cost,
    brute_force_alignment,
    compute_metrics,
    estimate_transitions,
    evaluate,
    kernel_moments,
    learn_discrete,
    learn_full,
    learn_known_sensor,
    report_from_truth,
)
from geohmm.moments import analytic_sequence, combine_moments, empirical_h
from geohmm.presets import EXAMPLE2_P, EXAMPLE2_REPORTED_P_HAT, example1_model, example2_model
from geohmm.rgauss import RiemannianGaussian
from oracles import brute_force_assignment, random_stochastic


@pytest.fixture(scope="module")
def ex1_data():
    truth = example1_model()
    _, chains = simulate_chains(truth, 2, 5000, seed=11)
    return truth, chains


@pytest.fixture(scope="module")
def ex1_full(ex1_data):
    truth, chains = ex1_data
    cfg = LearnConfig(tau_bar=2, seed=3, mc_samples=20_000)
    return learn_full(chains, 3, truth.kind, cfg), cfg


# -- discrete pipeline -------------------------------------------------------

def test_discrete_noise_free_recovery():
    rng = np.random.default_rng(0)
    P = random_stochastic(rng, 3)
    B = 0.6 * np.eye(3) + 0.4 * random_stochastic(rng, 3)
    pi = stationary(P)
    est = estimate_transitions(analytic_sequence(P, pi, B, 3, continuous=False), B)
    assert np.linalg.norm(est.P_hat - P) <= 1e-4
    np.testing.assert_allclose(est.pi_hat, pi, atol=1e-6)
    for a, t in zip(est.A, range(4)):
        np.testing.assert_allclose(a, np.diag(pi) @ np.linalg.matrix_power(P, t), atol=1e-5)


def test_discrete_from_simulated_symbols():
    rng = np.random.default_rng(1)
    P = np.array([[0.7, 0.2, 0.1], [0.1, 0.8, 0.1], [0.3, 0.3, 0.4]])
    B = np.array([[0.9, 0.05, 0.05], [0.05, 0.9, 0.05], [0.1, 0.1, 0.8]])
    states = simulate_states(P, stationary(P), 100_000, rng)
    symbols = (rng.random(len(states))[:, None] > np.cumsum(B, axis=1)[states]).sum(axis=1)
    est = learn_discrete(symbols, B, 2)
    assert np.linalg.norm(est.P_hat - P) < 0.05
    np.testing.assert_allclose(est.P_hat.sum(axis=1), 1.0, atol=1e-12)


def test_discrete_rejects_bad_observation_matrix():
    with pytest.raises(ValueError):
        learn_discrete(np.array([0, 1, 0]), np.array([[0.5, 0.6], [0.5, 0.5]]), 1)


# -- alignment -------------------------------------------------------------------

def test_alignment_identity_and_swap():
    truth = example2_model()
    assert align_components(truth, truth.components) == list(range(5))
    swapped = list(truth.components)
    swapped[1], swapped[3] = swapped[3], swapped[1]
    assert align_components(truth, swapped) == [0, 3, 2, 1, 4]


def test_alignment_matches_exhaustive_search():
    rng = np.random.default_rng(2)
    for _ in range(10):
        means = 0.8 * np.sqrt(rng.random(5)) * np.exp(2j * np.pi * rng.random(5))
        truth = [RiemannianGaussian("PoincareDisk", m, 0.1) for m in means]
        noisy = [RiemannianGaussian("PoincareDisk", 0.9 * m + 0.1 * rng.normal() * 1j, 0.1)
                 for m in means[rng.permutation(5)]]
        perm = align_components(truth, noisy)
        cost = assignment_cost(truth, noisy)
        assert sum(cost[i, perm[i]] for i in range(5)) == pytest.approx(brute_force_assignment(cost), abs=1e-12)
        bf = brute_force_alignment(truth, noisy)
        assert sum(cost[i, bf[i]] for i in range(5)) == pytest.approx(brute_force_assignment(cost), abs=1e-12)


def test_alignment_size_mismatch():
    truth = example2_model()
    with pytest.raises(ValueError):
        align_components(truth, truth.components[:4])


# -- metrics ---------------------------------------------------------------------

def test_metrics_zero_for_truth():
    for truth in (example1_model(), example2_model()):
        report = report_from_truth(truth)
        metrics = evaluate(report, truth)
        assert all(v == 0.0 for v in metrics.values())
        assert report.alignment == list(range(truth.n_states))


def test_metrics_on_reported_example2_estimate():
    truth = example2_model()
    report = report_from_truth(truth)
    report.P_hat = EXAMPLE2_REPORTED_P_HAT.copy()
    m = compute_metrics(truth, report)
    assert m["relative_transition_error"] == pytest.approx(0.050, abs=5e-4)
    assert m["mean_abs_entry_error"] == pytest.approx(0.01, abs=2e-3)
    assert m["transition_error"] == pytest.approx(0.050 * np.linalg.norm(EXAMPLE2_P), abs=1e-3)


def test_metrics_follow_definitions():
    truth = example1_model()
    report = report_from_truth(truth)
    comps = [RiemannianGaussian(c.kind, c.mean * 0.9, c.sigma + 0.01 * (i + 1))
             for i, c in enumerate(truth.components)]
    report.mixture.components = comps
    report.P_hat = np.full((3, 3), 1 / 3)
    m = compute_metrics(truth, report, [0, 1, 2])
    man = truth.manifold
    d2 = sum(man.dist(t.mean, e.mean) ** 2 for t, e in zip(truth.components, comps))
    assert m["mean_error"] == pytest.approx(np.sqrt(d2), rel=1e-12)
    assert m["dispersion_error"] == pytest.approx(0.01 * np.sqrt(14), rel=1e-12)
    assert m["transition_error"] == pytest.approx(np.linalg.norm(truth.P - 1 / 3), rel=1e-12)
    assert m["mean_abs_entry_error"] == pytest.approx(np.abs(truth.P - 1 / 3).mean(), rel=1e-12)


def test_evaluate_rejects_state_mismatch():
    with pytest.raises(ValueError):
        evaluate(report_from_truth(example1_model()), example2_model())


# -- pipelines ---------------------------------------------------------------------

def test_known_sensor_example1_beats_full_pipeline_reference():
    truth = example1_model()
    _, chains = simulate_chains(truth, 1, 10_000, seed=5)
    report = learn_known_sensor(chains, truth.components, LearnConfig(tau_bar=3, seed=5))
    evaluate(report, truth)
    assert report.metrics["transition_error"] < 0.21
    np.testing.assert_allclose(report.P_hat.sum(axis=1), 1.0, atol=1e-12)
    assert np.all(report.P_hat >= 0)
    assert report.K.is_psd


def test_multichain_moments_are_pair_weighted(ex1_data):
    truth, chains = ex1_data
    pooled = kernel_moments([chains[0], chains[1][:1000]], truth.components, 2)
    ref = combine_moments([empirical_h(chains[0], truth.components, 2),
                           empirical_h(chains[1][:1000], truth.components, 2)])
    np.testing.assert_allclose(pooled.lags, ref.lags, rtol=1e-14)
    threaded = kernel_moments([chains[0], chains[1][:1000]], truth.components, 2, threads=2)
    np.testing.assert_array_equal(threaded.lags, pooled.lags)


def test_full_pipeline_is_deterministic_and_decoupled(ex1_data, ex1_full):
    truth, chains = ex1_data
    report, cfg = ex1_full
    again = learn_full(chains, 3, truth.kind, cfg)
    np.testing.assert_array_equal(again.P_hat, report.P_hat)
    stage2 = learn_full(chains, 3, truth.kind, cfg, mixture=report.mixture)
    np.testing.assert_array_equal(stage2.P_hat, report.P_hat)
    direct = learn_known_sensor(chains, report.components, cfg, weights=report.mixture.weights)
    np.testing.assert_array_equal(direct.P_hat, report.P_hat)
    assert not report.known_sensor
    assert set(report.runtimes) >= {"mixture", "K", "moments", "matching"}


def test_metrics_invariant_to_stage1_relabeling(ex1_data, ex1_full):
    truth, chains = ex1_data
    report, cfg = ex1_full
    base = evaluate(learn_full(chains, 3, truth.kind, cfg, mixture=report.mixture), truth)
    for p in ([1, 2, 0], [2, 1, 0]):
        relabeled = learn_full(chains, 3, truth.kind, cfg, mixture=report.mixture.permute(p))
        metrics = evaluate(relabeled, truth)
        for k in base:
            assert metrics[k] == pytest.approx(base[k], abs=1e-7)


def test_report_dict_round_trip(ex1_data, ex1_full):
    truth, _ = ex1_data
    report, _ = ex1_full
    evaluate(report, truth)
    back = LearnReport.from_dict(report.to_dict())
    np.testing.assert_array_equal(back.P_hat, report.P_hat)
    np.testing.assert_array_equal(back.K.K, report.K.K)
    assert back.metrics == report.metrics
    assert back.alignment == report.alignment
    assert back.to_dict() == report.to_dict()


def test_stage_errors_are_labeled():
    y = np.zeros(200, dtype=complex)
    with pytest.raises(StageError) as info:
        learn_full(y, 2, "PoincareDisk", LearnConfig(tau_bar=1, mc_samples=1000))
    assert str(info.value).startswith("[mixture]")


def test_chain_length_must_exceed_lags():
    truth = example1_model()
    with pytest.raises(ValueError):
        learn_known_sensor(np.zeros(3, dtype=complex), truth.components, LearnConfig(tau_bar=3))
    with pytest.raises(ValueError):
        LearnConfig(tau_bar=0)
