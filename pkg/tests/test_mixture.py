"""Tests for the heteroscedastic mixture EM, the pooled MLE, and the
scikit-learn estimator wrapper.

Closed-form reference values come from solving the stationarity conditions
by hand on degenerate corpora (exact duplicates, zero noise), where every
update has an analytic answer.
"""

import math

import numpy as np
import pytest
from scipy.stats import norm
from sklearn.base import clone
from sklearn.exceptions import NotFittedError

from aeskit import (
    ConfigError,
    DataError,
    EffectSizeGMM,
    EstimationError,
    FitConfig,
    MixtureParams,
    extract_aes,
    fit_mixture,
    fit_pooled,
    penalized_loglik,
)
from aeskit.mixture import component_density, e_step, m_step
from aeskit.validation import effect_noise_arrays


def single_population(m=300, mu=1.0, tau2=0.3, seed=0):
    rng = np.random.default_rng(seed)
    se2 = rng.uniform(0.1, 1.5, size=m)
    d = rng.normal(mu, np.sqrt(tau2 + se2))
    return d, se2


def three_cluster(m=240, seed=1):
    rng = np.random.default_rng(seed)
    comp = rng.choice(3, size=m, p=[0.25, 0.5, 0.25])
    means = np.array([2.0, 0.0, -2.0])
    se2 = rng.uniform(0.05, 0.4, size=m)
    d = rng.normal(means[comp], np.sqrt(0.1 + se2))
    return d, se2


class TestDensities:
    def test_component_density_reference(self):
        # Unit total variance: the standard normal density at one.
        assert component_density(1.0, 0.75, 0.0, 0.25) == pytest.approx(
            0.24197072451914337, abs=1e-12)

    def test_component_density_peak_height(self):
        # Total variance 1/(2*pi) makes the mode height exactly one.
        v = 1.0 / (2.0 * math.pi)
        assert component_density(0.3, v / 2, 0.3, v / 2) == pytest.approx(1.0, abs=1e-12)

    def test_component_density_rejects_degenerate(self):
        with pytest.raises(ValueError):
            component_density(0.0, 0.0, 0.0, 0.0)

    def test_penalized_loglik_single_observation(self):
        params = MixtureParams(1, [1.0], [0.0], [0.5])
        d = np.array([0.5])
        se2 = np.array([0.5])
        base = norm.logpdf(0.5, 0.0, 1.0)
        with_pen = base - (1.0 / 0.5 + math.log(0.5))
        assert penalized_loglik(d, se2, params, penalized=False) == pytest.approx(
            base, abs=1e-12)
        assert penalized_loglik(d, se2, params, penalized=True) == pytest.approx(
            with_pen, abs=1e-12)

    def test_penalized_loglik_matches_scipy_mixture(self):
        d, se2 = three_cluster(m=40)
        params = MixtureParams(3, [0.2, 0.5, 0.3], [1.5, 0.0, -1.5],
                               [0.3, 0.2, 0.4])
        dens = sum(w * norm.pdf(d, mu, np.sqrt(t + se2))
                   for w, mu, t in zip(params.weights, params.means,
                                       params.comp_vars))
        assert penalized_loglik(d, se2, params, penalized=False) == pytest.approx(
            float(np.sum(np.log(dens))), abs=1e-9)


class TestESten:
    def test_hand_computed_two_components(self):
        params = MixtureParams(2, [0.3, 0.7], [2.0, 0.0], [1.0, 1.0])
        d = np.array([1.5])
        se2 = np.array([0.0])
        f1 = math.exp(-0.5 * 0.25) / math.sqrt(2 * math.pi)
        f2 = math.exp(-0.5 * 2.25) / math.sqrt(2 * math.pi)
        expected = 0.3 * f1 / (0.3 * f1 + 0.7 * f2)
        resp = e_step(d, se2, params)
        assert resp.shape == (1, 2)
        assert resp[0, 0] == pytest.approx(expected, abs=1e-12)
        assert resp[0].sum() == pytest.approx(1.0, abs=1e-15)

    def test_single_component_gives_ones(self):
        params = MixtureParams(1, [1.0], [0.3], [0.5])
        resp = e_step(np.array([0.0, 1.0, 5.0]), np.zeros(3), params)
        np.testing.assert_allclose(resp, 1.0)

    def test_symmetric_point_splits_evenly(self):
        params = MixtureParams(2, [0.5, 0.5], [1.0, -1.0], [0.4, 0.4])
        resp = e_step(np.array([0.0]), np.array([0.2]), params)
        assert resp[0, 0] == pytest.approx(0.5, abs=1e-12)

    def test_rows_sum_to_one_under_extreme_separation(self):
        params = MixtureParams(2, [0.5, 0.5], [400.0, -400.0], [0.01, 0.01])
        resp = e_step(np.array([-400.0, 0.0, 400.0]), np.zeros(3), params)
        np.testing.assert_allclose(resp.sum(axis=1), 1.0, atol=1e-14)

    def test_nan_rejected(self):
        params = MixtureParams(1, [1.0], [0.0], [1.0])
        with pytest.raises(DataError):
            e_step(np.array([np.nan]), np.array([0.1]), params)


class TestMStep:
    def test_single_component_closed_form(self):
        # No noise, no penalty, unit responsibilities: the M-step must land
        # on the sample mean and the biased sample variance.
        rng = np.random.default_rng(3)
        d = rng.normal(0.7, 1.3, size=200)
        se2 = np.zeros(200)
        resp = np.ones((200, 1))
        prev = MixtureParams(1, [1.0], [0.0], [1.0])
        cfg = FitConfig(K=1, penalized=False)
        out = m_step(d, se2, resp, prev, cfg)
        assert out.means[0] == pytest.approx(float(np.mean(d)), abs=1e-8)
        assert out.comp_vars[0] == pytest.approx(float(np.var(d)), rel=1e-6)

    def test_weights_are_responsibility_means(self):
        d, se2 = three_cluster(m=60)
        rng = np.random.default_rng(4)
        resp = rng.dirichlet(np.ones(3), size=60)
        prev = MixtureParams(3, [1 / 3] * 3, [1.0, 0.0, -1.0], [0.5, 0.5, 0.5])
        out = m_step(d, se2, resp, prev, FitConfig(K=3))
        np.testing.assert_allclose(out.weights, resp.mean(axis=0), atol=1e-12)
        assert out.weights.sum() == pytest.approx(1.0, abs=1e-12)

    def test_pinned_mean_stays_zero(self):
        d, se2 = three_cluster(m=60)
        resp = np.full((60, 3), 1 / 3)
        prev = MixtureParams(3, [1 / 3] * 3, [1.0, 0.0, -1.0], [0.5, 0.5, 0.5])
        out = m_step(d, se2, resp, prev, FitConfig(K=3, fix_flat_mean=True))
        assert out.means[1] == 0.0
        assert out.means[0] != 0.0

    def test_never_decreases_objective(self):
        d, se2 = three_cluster(m=80)
        params = MixtureParams(3, [0.3, 0.4, 0.3], [1.0, 0.0, -1.0],
                               [0.2, 0.2, 0.2])
        cfg = FitConfig(K=3)
        for _ in range(5):
            before = penalized_loglik(d, se2, params, True)
            resp = e_step(d, se2, params)
            params = m_step(d, se2, resp, params, cfg)
            after = penalized_loglik(d, se2, params, True)
            assert after >= before - 1e-9 * d.shape[0]


class TestPenalty:
    def test_duplicate_spike_closed_form(self):
        # Exact duplicates with zero noise: unpenalized ML drives a
        # component variance into the floor; the penalty has an analytic
        # optimum tau2 = (1/m) / (n_k/2 + 1/m) = 0.1 for two clusters of
        # three points each.
        d = np.array([0.0, 0.0, 0.0, 5.0, 5.0, 5.0])
        se2 = np.zeros(6)
        cfg = FitConfig(K=2, penalized=True, tolerance=1e-10, n_starts=4)
        params, _, _ = fit_mixture(d, se2, cfg)
        np.testing.assert_allclose(params.means, [5.0, 0.0], atol=1e-9)
        np.testing.assert_allclose(params.weights, [0.5, 0.5], atol=1e-12)
        np.testing.assert_allclose(params.comp_vars, [0.1, 0.1], rtol=1e-5)

    def test_unpenalized_collapses_to_floor(self):
        d = np.array([0.0, 0.0, 0.0, 5.0, 5.0, 5.0])
        se2 = np.zeros(6)
        cfg = FitConfig(K=2, penalized=False, tolerance=1e-10, n_starts=4)
        params, _, _ = fit_mixture(d, se2, cfg)
        assert np.all(params.comp_vars >= cfg.var_floor)
        np.testing.assert_allclose(params.comp_vars, cfg.var_floor, rtol=1e-3)

    def test_penalty_term_value(self):
        params = MixtureParams(2, [0.5, 0.5], [1.0, 0.0], [0.5, 2.0])
        d, se2 = single_population(m=10)
        pen = penalized_loglik(d, se2, params, True) - penalized_loglik(
            d, se2, params, False)
        expected = -(1.0 / 10) * ((1 / 0.5 + math.log(0.5)) + (1 / 2.0 + math.log(2.0)))
        assert pen == pytest.approx(expected, abs=1e-12)


class TestFitMixture:
    def test_recovers_single_population(self):
        d, se2 = single_population(m=400, mu=1.0, tau2=0.3, seed=5)
        cfg = FitConfig(K=1, penalized=False, tolerance=1e-8)
        params, resp, diag = fit_mixture(d, se2, cfg)
        assert params.means[0] == pytest.approx(1.0, abs=0.1)
        assert params.comp_vars[0] == pytest.approx(0.3, abs=0.15)
        assert resp.shape == (400, 1)

    def test_recovers_three_clusters(self):
        d, se2 = three_cluster(m=600, seed=6)
        params, resp, diag = fit_mixture(d, se2, FitConfig())
        assert params.means[1] == 0.0           # pinned flat component
        assert params.means[0] == pytest.approx(2.0, abs=0.35)
        assert params.means[2] == pytest.approx(-2.0, abs=0.35)
        assert params.weights.sum() == pytest.approx(1.0, abs=1e-12)
        np.testing.assert_allclose(resp.sum(axis=1), 1.0, atol=1e-12)

    def test_means_sorted_without_pin(self):
        d, se2 = three_cluster(m=300, seed=7)
        params, _, _ = fit_mixture(d, se2, FitConfig(fix_flat_mean=False))
        assert np.all(np.diff(params.means) <= 0)

    def test_deterministic_given_seed(self):
        d, se2 = three_cluster(m=150, seed=8)
        a, _, _ = fit_mixture(d, se2, FitConfig(n_starts=3))
        b, _, _ = fit_mixture(d, se2, FitConfig(n_starts=3))
        np.testing.assert_array_equal(a.means, b.means)
        np.testing.assert_array_equal(a.comp_vars, b.comp_vars)
        np.testing.assert_array_equal(a.weights, b.weights)

    def test_threads_do_not_change_result(self):
        d, se2 = three_cluster(m=150, seed=9)
        a, _, _ = fit_mixture(d, se2, FitConfig(n_starts=4), n_jobs=1)
        b, _, _ = fit_mixture(d, se2, FitConfig(n_starts=4), n_jobs=4)
        np.testing.assert_array_equal(a.means, b.means)
        np.testing.assert_array_equal(a.comp_vars, b.comp_vars)

    def test_shuffle_invariance(self):
        d, se2 = three_cluster(m=200, seed=10)
        perm = np.random.default_rng(0).permutation(200)
        a, _, _ = fit_mixture(d, se2, FitConfig(n_starts=3))
        b, _, _ = fit_mixture(d[perm], se2[perm], FitConfig(n_starts=3))
        np.testing.assert_allclose(a.means, b.means, atol=1e-9)
        np.testing.assert_allclose(a.comp_vars, b.comp_vars, atol=1e-9)
        np.testing.assert_allclose(a.weights, b.weights, atol=1e-9)

    def test_trace_is_monotone(self):
        for seed in range(5):
            d, se2 = three_cluster(m=120, seed=seed)
            _, _, diag = fit_mixture(d, se2, FitConfig(n_starts=2))
            diffs = np.diff(diag.loglik_trace)
            assert np.all(diffs >= -1e-9 * 120)

    def test_homoscedastic_mode_ignores_noise(self):
        d, _ = three_cluster(m=200, seed=11)
        cfg = FitConfig(K=2, heteroscedastic=False, fix_flat_mean=False)
        a, _, _ = fit_mixture(d, None, cfg)
        b, _, _ = fit_mixture(d, np.full(200, 99.0), cfg)
        np.testing.assert_array_equal(a.means, b.means)

    def test_diagnostics_cover_all_starts(self):
        d, se2 = three_cluster(m=120, seed=12)
        _, _, diag = fit_mixture(d, se2, FitConfig(n_starts=5))
        assert len(diag.start_loglik) == 5
        assert len(diag.start_converged) == 5
        assert diag.start_init[0] == "kmeans"
        assert diag.best_start == int(np.nanargmax(diag.start_loglik))

    def test_input_validation(self):
        d, se2 = single_population(m=20)
        with pytest.raises(DataError):
            fit_mixture(d, None, FitConfig())               # missing noise
        with pytest.raises(DataError):
            fit_mixture(d, se2[:-1], FitConfig())           # length mismatch
        with pytest.raises(DataError):
            fit_mixture(np.array([np.nan] * 20), se2, FitConfig())
        with pytest.raises(DataError):
            fit_mixture(d, -se2, FitConfig())               # negative noise
        with pytest.raises(DataError):
            fit_mixture(d[:5], se2[:5], FitConfig(K=3))     # m < 2K

    def test_config_validation(self):
        with pytest.raises(ConfigError):
            FitConfig(K=0)
        with pytest.raises(ConfigError):
            FitConfig(tolerance=0.0)
        with pytest.raises(ConfigError):
            FitConfig(n_starts=0)
        with pytest.raises(ConfigError):
            FitConfig(K=1, fix_flat_mean=True)
        assert FitConfig(K=3).pin_flat
        assert not FitConfig(K=2).pin_flat


class TestPooled:
    def test_equal_noise_mean_is_sample_mean(self):
        rng = np.random.default_rng(13)
        d = rng.normal(0.8, 1.0, size=120)
        se2 = np.full(120, 0.4)
        res = fit_pooled(d, se2)
        assert res.mu0 == pytest.approx(float(np.mean(d)), abs=1e-9)

    def test_loglik_matches_independent_formula(self):
        d, se2 = single_population(m=150, seed=14)
        res = fit_pooled(d, se2)
        ll = float(np.sum(norm.logpdf(d, res.mu0, np.sqrt(res.tau2 + se2))))
        assert res.loglik == pytest.approx(ll, abs=1e-9)

    def test_beats_dense_grid(self):
        d, se2 = single_population(m=80, seed=15)
        res = fit_pooled(d, se2)
        taus = np.geomspace(1e-6, 10 * np.var(d), 120)
        mus = np.linspace(d.min(), d.max(), 120)
        best = -np.inf
        for t in taus:
            sd = np.sqrt(t + se2)
            lls = norm.logpdf(d[None, :], mus[:, None], sd[None, :]).sum(axis=1)
            best = max(best, float(lls.max()))
        assert res.loglik >= best - 1e-6

    def test_zero_spread_population(self):
        # All variation explained by noise: tau2 lands on the floor.
        rng = np.random.default_rng(16)
        se2 = np.full(400, 2.0)
        d = rng.normal(0.5, np.sqrt(0.05 + se2))  # truth below noise scale
        res = fit_pooled(d, se2)
        assert res.tau2 < 0.5

    def test_validation(self):
        with pytest.raises(DataError):
            fit_pooled([1.0], [0.5])
        with pytest.raises(DataError):
            fit_pooled([1.0, 2.0], [0.5])
        with pytest.raises(DataError):
            fit_pooled([1.0, np.inf], [0.5, 0.5])


class TestPooledAgreement:
    def test_k1_fit_matches_pooled_route(self):
        # Two independent routes to the same single-population MLE: EM with
        # one component (penalty off) and the profile-likelihood search.
        for seed in range(3):
            d, se2 = single_population(m=150, mu=0.6, tau2=0.4, seed=seed)
            res = fit_pooled(d, se2)
            cfg = FitConfig(K=1, penalized=False, tolerance=1e-10,
                            max_iterations=20000)
            params, _, _ = fit_mixture(d, se2, cfg)
            assert params.means[0] == pytest.approx(res.mu0, abs=1e-6)
            assert params.comp_vars[0] == pytest.approx(res.tau2, abs=1e-6)


class TestExtractAes:
    def test_top_mean_for_small_k(self):
        params = MixtureParams(3, [0.2, 0.6, 0.2], [1.7, 0.0, -1.2],
                               [0.1, 0.1, 0.1])
        assert extract_aes(params) == pytest.approx(1.7)

    def test_weighted_average_above_three(self):
        params = MixtureParams(4, [0.1, 0.3, 0.4, 0.2], [3.0, 1.0, 0.0, -2.0],
                               [0.1] * 4)
        assert extract_aes(params) == pytest.approx(1.5)

    def test_no_positive_mean_raises(self):
        params = MixtureParams(2, [0.5, 0.5], [0.0, -1.0], [0.1, 0.1])
        with pytest.raises(EstimationError):
            extract_aes(params)


class TestEstimatorWrapper:
    def test_sklearn_protocol(self):
        est = EffectSizeGMM(n_components=2, fix_flat_mean=False, n_starts=2)
        cloned = clone(est)
        assert cloned.get_params() == est.get_params()
        est.set_params(tol=1e-4)
        assert est.tol == 1e-4

    def test_fit_sets_attributes(self):
        d, se2 = three_cluster(m=150, seed=17)
        est = EffectSizeGMM(n_starts=3).fit(np.column_stack([d, se2]))
        assert est.means_.shape == (3,)
        assert est.weights_.sum() == pytest.approx(1.0, abs=1e-12)
        assert est.responsibilities_.shape == (150, 3)
        assert np.isfinite(est.penalized_loglik_)
        assert est.assumed_effect_size() > 0

    def test_two_column_matches_separate_se2(self):
        d, se2 = three_cluster(m=120, seed=18)
        a = EffectSizeGMM(n_starts=2).fit(np.column_stack([d, se2]))
        b = EffectSizeGMM(n_starts=2).fit(d, se2=se2)
        np.testing.assert_array_equal(a.means_, b.means_)

    def test_predict_proba_rows_sum_to_one(self):
        d, se2 = three_cluster(m=100, seed=19)
        est = EffectSizeGMM(n_starts=2).fit(np.column_stack([d, se2]))
        proba = est.predict_proba(np.column_stack([d, se2]))
        np.testing.assert_allclose(proba.sum(axis=1), 1.0, atol=1e-12)
        labels = est.predict(np.column_stack([d, se2]))
        assert set(labels) <= {0, 1, 2}

    def test_score_is_mean_unpenalized_loglik(self):
        d, se2 = three_cluster(m=100, seed=20)
        est = EffectSizeGMM(n_starts=2).fit(np.column_stack([d, se2]))
        expected = penalized_loglik(d, se2, est.params_, penalized=False) / 100
        assert est.score(np.column_stack([d, se2])) == pytest.approx(
            expected, abs=1e-12)

    def test_not_fitted_error(self):
        est = EffectSizeGMM()
        with pytest.raises(NotFittedError):
            est.predict_proba(np.array([0.1, 0.2]), se2=np.array([0.1, 0.1]))
        with pytest.raises(NotFittedError):
            est.assumed_effect_size()

    def test_input_normalization(self):
        with pytest.raises(DataError):
            effect_noise_arrays(np.ones((4, 2)), se2=np.ones(4))  # double supply
        with pytest.raises(DataError):
            effect_noise_arrays(np.ones(4), heteroscedastic=True)
        with pytest.raises(DataError):
            effect_noise_arrays(np.ones((4, 3)))
        d, z = effect_noise_arrays(np.ones(4), heteroscedastic=False)
        np.testing.assert_array_equal(z, np.zeros(4))
        d2, s2 = effect_noise_arrays(np.ones((4, 1)), se2=np.full(4, 0.2))
        np.testing.assert_array_equal(s2, np.full(4, 0.2))
