import numpy as np
from django.test import SimpleTestCase
from scipy import integrate

from dynamics.distributions import mvt_logpdf
from dynamics.exceptions import ConfigurationError, DataError
from dynamics.filtering import PosteriorState, initial_state, iter_filter, run_filter, update
from dynamics.forecast import (
    correlation_forecast,
    credible_bounds,
    forecast,
    forecast_path,
    horizon_spread,
    metrics_table,
    rolling_metrics,
    standardized_errors,
    vol_forecast_mean,
)
from dynamics.model_core import ModelConfig, default_prior

from .factories import simulate_var


class ForecastTests(SimpleTestCase):

    def setUp(self):
        self.config = ModelConfig(p=2, d=2, delta=0.98, beta=0.9)
        self.values = np.random.default_rng(2).normal(size=(60, 2))
        self.state = run_filter(self.values, self.config, default_prior(self.config)).final

    def test_one_step_matches_filter_predictive(self):
        result = forecast(self.state, self.config, 1)
        _, step = update(self.state, np.zeros(2), self.config)
        np.testing.assert_allclose(result.mean, step.mean)
        np.testing.assert_allclose(result.scale, step.Qstar1)
        np.testing.assert_allclose(result.covariance, step.Qstar1 / (self.config.dof - 2.0))

    def test_covariance_is_rescaled_scale(self):
        for h in (1, 3):
            result = forecast(self.state, self.config, h)
            np.testing.assert_allclose(result.covariance, result.scale * 0.1 / 0.7)
            self.assertEqual(result.dof, 9.0)

    def test_path_chains_means(self):
        path = forecast_path(self.state, self.config, 3)
        self.assertEqual([result.h for result in path], [1, 2, 3])
        np.testing.assert_allclose(path[1].design[1:3], path[0].mean)
        np.testing.assert_allclose(path[1].design[3:5], self.values[-1])
        np.testing.assert_allclose(path[2].design[1:5], np.concatenate([path[1].mean, path[0].mean]))

    def test_scalar_chained_means(self):
        config = ModelConfig(p=1, d=1, delta=0.98, beta=0.9)
        state = PosteriorState(
            t=10, m=np.array([[0.0], [0.5]]), P=np.eye(2), S=np.array([[1.0]]), history=np.array([[8.0]]),
        )
        means = [result.mean[0] for result in forecast_path(state, config, 3)]
        self.assertEqual(means, [4.0, 2.0, 1.0])

    def test_spread_grows_with_horizon(self):
        traces = [np.trace(result.spread) for result in forecast_path(self.state, self.config, 4)]
        self.assertTrue(all(b > a for a, b in zip(traces, traces[1:])))

    def test_constant_horizon_discount(self):
        config = ModelConfig(p=2, d=2, delta=0.98, beta=0.9, horizon_discount='constant')
        P = np.eye(5)
        np.testing.assert_allclose(horizon_spread(P, config, 1), P / 0.98)
        np.testing.assert_allclose(horizon_spread(P, config, 3), P + 3 * (P / 0.98 - P))

    def test_volatility_forecast_mean(self):
        np.testing.assert_allclose(
            vol_forecast_mean(self.state, self.config),
            (1 - 0.9) / (3 * 0.9 - 2) * self.state.S / 1.1,
        )
        correlation = correlation_forecast(self.state, self.config)
        np.testing.assert_allclose(np.diag(correlation), 1.0)
        self.assertTrue(np.all(np.abs(correlation) <= 1.0))

    def test_correlation_needs_two_series(self):
        config = ModelConfig(p=1, d=1, delta=0.98, beta=0.9)
        state = run_filter(self.values[:, :1], config, default_prior(config)).final
        with self.assertRaises(ConfigurationError):
            correlation_forecast(state, config)

    def test_invalid_horizon(self):
        with self.assertRaises(ConfigurationError):
            forecast(self.state, self.config, 0)

    def test_credible_bounds_are_symmetric(self):
        result = forecast(self.state, self.config, 2)
        lower, upper = credible_bounds(result, 0.9)
        np.testing.assert_allclose(0.5 * (lower + upper), result.mean)
        self.assertTrue(np.all(upper > lower))
        with self.assertRaises(ConfigurationError):
            credible_bounds(result, 1.5)

    def test_standardized_errors(self):
        result = forecast(self.state, self.config, 1)
        observed = result.mean + np.array([0.5, -0.25])
        e, u, v = standardized_errors(result, observed)
        np.testing.assert_allclose(e, [0.5, -0.25])
        np.testing.assert_allclose(u @ u, e @ np.linalg.solve(result.scale, e))
        np.testing.assert_allclose(v @ v, e @ np.linalg.solve(result.covariance, e))


class DensityTests(SimpleTestCase):

    def test_univariate_density_integrates_to_one(self):
        for dof in (3.0, 9.0, 30.0):
            scale = np.array([[2.5 / dof]])
            total, _ = integrate.quad(
                lambda x: np.exp(mvt_logpdf([x], [0.3], scale, dof)),
                -np.inf, np.inf, epsabs=1e-12, epsrel=1e-12, limit=200,
            )
            self.assertLess(abs(total - 1.0), 1e-6)

    def test_matches_scipy(self):
        from scipy.stats import multivariate_t

        rng = np.random.default_rng(4)
        A = rng.normal(size=(3, 3))
        scale = A @ A.T + np.eye(3)
        x, loc = rng.normal(size=3), rng.normal(size=3)
        expected = multivariate_t(loc=loc, shape=scale, df=7.0).logpdf(x)
        self.assertAlmostEqual(mvt_logpdf(x, loc, scale, 7.0), expected, places=10)


class MetricsTests(SimpleTestCase):

    def test_one_step_metrics_follow_filter_errors(self):
        config = ModelConfig(p=2, d=1, delta=0.98, beta=0.9)
        values = np.random.default_rng(6).normal(size=(80, 2))
        prior = default_prior(config)
        metrics = rolling_metrics(values, config, prior, 1)
        errors = np.array([step.e for _, step in iter_filter(values, config, prior)])
        self.assertEqual(metrics.count, 79)
        np.testing.assert_allclose(metrics.me, errors.mean(axis=0))
        np.testing.assert_allclose(metrics.mae, np.abs(errors).mean(axis=0))

    def test_counts_per_horizon(self):
        config = ModelConfig(p=2, d=2, delta=0.98, beta=0.9)
        values = np.random.default_rng(7).normal(size=(40, 2))
        metrics = metrics_table(values, config, default_prior(config), [3, 1, 2])
        self.assertEqual([item.h for item in metrics], [1, 2, 3])
        self.assertEqual([item.count for item in metrics], [38, 37, 36])

    def test_too_short_for_horizon(self):
        config = ModelConfig(p=1, d=2, delta=0.98, beta=0.9)
        with self.assertRaises(DataError):
            metrics_table(np.ones((5, 1)), config, default_prior(config), [3])

    def test_prior_state_forecasts_first_step(self):
        config = ModelConfig(p=1, d=1, delta=0.98, beta=0.9)
        values = np.random.default_rng(8).normal(size=(10, 1))
        prior = default_prior(config)
        metrics = rolling_metrics(values, config, prior, 1)
        first = forecast(initial_state(values, config, prior), config, 1)
        self.assertEqual(metrics.count, 9)
        self.assertEqual(first.origin, 1)
        np.testing.assert_allclose(first.mean, [0.0])

    def test_calibration_on_simulated_data(self):
        inside = 0
        covered = 0
        total = 0
        for seed in range(10):
            frame, _, config, prior = simulate_var(seed)
            (one_step,) = metrics_table(frame, config, prior, [1])
            if np.all((one_step.msse >= 0.8) & (one_step.msse <= 1.2)):
                inside += 1
            previous = initial_state(frame.values, config, prior)
            for state, _ in iter_filter(frame, config, prior):
                lower, upper = credible_bounds(forecast(previous, config, 1), 0.9)
                y = frame.values[state.t - 1]
                covered += int(np.sum((y >= lower) & (y <= upper)))
                total += config.p
                previous = state
        self.assertGreaterEqual(inside, 8)
        self.assertTrue(0.87 <= covered / total <= 0.93, covered / total)

    def test_mae_grows_with_horizon(self):
        increasing = 0
        for seed in range(10):
            frame, _, config, prior = simulate_var(
                seed, p=1, d=1, coefficients=(0.8,), volatility_mode='fixed', state_spread=0.0,
            )
            maes = [item.mae[0] for item in metrics_table(frame, config, prior, [1, 2, 3, 4, 5])]
            if all(b >= a for a, b in zip(maes, maes[1:])):
                increasing += 1
        self.assertGreaterEqual(increasing, 9)
