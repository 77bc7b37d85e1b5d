import numpy as np
from django.test import SimpleTestCase

from dynamics.exceptions import ConfigurationError, DataError
from dynamics.filtering import iter_filter
from dynamics.forecast import forecast
from dynamics.model_core import ModelConfig, default_prior
from dynamics.tests.factories import prior_for, simulate_var
from portfolio.allocation import AllocationInput, allocate_cp, allocate_up
from portfolio.backtest import backtest, backtest_grid, cumulate


class CumulateTests(SimpleTestCase):

    def test_additive_and_compound(self):
        returns = np.array([0.1, -0.05, 0.02])
        np.testing.assert_allclose(cumulate(returns), [0.1, 0.05, 0.07])
        np.testing.assert_allclose(cumulate(returns, compound=True), [0.1, 1.1 * 0.95 - 1.0, 1.1 * 0.95 * 1.02 - 1.0])


class BacktestTests(SimpleTestCase):

    def setUp(self):
        self.frame, _, self.config, self.prior = simulate_var(0, p=3, d=2, n_obs=120, coefficients=(0.1, 0.2))

    def test_starts_at_d_plus_two(self):
        report = backtest(self.frame, self.config, self.prior)
        self.assertEqual(report.times[0], self.config.d + 2)
        self.assertEqual(report.times[-1], 120)
        self.assertEqual(report.weights['up'].shape, (117, 3))
        self.assertEqual(report.strategies, ('up', 'cp', 'ewp'))

    def test_equal_weight_return_is_cross_sectional_mean(self):
        report = backtest(self.frame, self.config, self.prior, strategies=['ewp'])
        realized = self.frame.values[report.times - 1]
        np.testing.assert_allclose(report.returns['ewp'], realized.mean(axis=1))
        np.testing.assert_allclose(report.cumulative['ewp'], np.cumsum(realized.mean(axis=1)))
        self.assertAlmostEqual(report.summary['ewp'], 100.0 * np.mean(np.cumsum(realized.mean(axis=1))))

    def test_weights_follow_one_step_forecasts(self):
        report = backtest(self.frame, self.config, self.prior, target=0.002)
        for state, _ in iter_filter(self.frame, self.config, self.prior):
            if state.t == 10:
                one_step = forecast(state, self.config, 1)
                break
        allocation = AllocationInput(f=one_step.mean, Q=one_step.covariance, m=0.002)
        row = list(report.times).index(11)
        np.testing.assert_allclose(report.weights['up'][row], allocate_up(allocation))
        np.testing.assert_allclose(report.weights['cp'][row], allocate_cp(allocation))
        np.testing.assert_allclose(report.weights['cp'].sum(axis=1), 1.0)

    def test_compounding(self):
        additive = backtest(self.frame, self.config, self.prior, strategies='ewp')
        compound = backtest(self.frame, self.config, self.prior, strategies='ewp', compound=True)
        np.testing.assert_allclose(compound.returns['ewp'], additive.returns['ewp'])
        np.testing.assert_allclose(compound.cumulative['ewp'], np.cumprod(1.0 + additive.returns['ewp']) - 1.0)
        self.assertEqual(compound.metadata['cumulation'], 'compound')

    def test_zero_series_flags_infeasible_steps(self):
        config = ModelConfig(p=2, d=1, delta=0.98, beta=0.9)
        with self.assertLogs('portfolio.backtest', level='WARNING'):
            report = backtest(np.zeros((30, 2)), config)
        np.testing.assert_array_equal(report.returns['ewp'], 0.0)
        self.assertTrue(np.all(report.failed['up']))
        self.assertTrue(np.all(report.failed['cp']))
        self.assertFalse(np.any(report.failed['ewp']))
        np.testing.assert_array_equal(report.weights['up'], 0.0)
        self.assertEqual(report.failed_steps, {'up': 28, 'cp': 28, 'ewp': 0})

    def test_too_short(self):
        config = ModelConfig(p=2, d=2, delta=0.98, beta=0.9)
        with self.assertRaises(DataError):
            backtest(np.zeros((3, 2)), config)

    def test_invalid_arguments(self):
        with self.assertRaises(ConfigurationError):
            backtest(self.frame, self.config, self.prior, target=np.inf)
        with self.assertRaises(ConfigurationError):
            backtest(self.frame, self.config, self.prior, strategies='up,risk-parity')
        single = ModelConfig(p=1, d=1, delta=0.98, beta=0.9)
        with self.assertRaises(ConfigurationError):
            backtest(np.ones((20, 1)), single, strategies='ewp')


class BacktestGridTests(SimpleTestCase):

    def test_rows_keep_config_order(self):
        frame, _, _, _ = simulate_var(1, p=3, d=2, n_obs=80, coefficients=(0.1, 0.2))
        configs = [ModelConfig(p=3, d=d, delta=delta, beta=0.9) for d in (2, 1) for delta in (0.98, 0.9)]
        serial = backtest_grid(frame, configs, priors=prior_for)
        threaded = backtest_grid(frame, configs, priors=prior_for, jobs=2)
        self.assertEqual([row.config for row in serial], configs)
        self.assertEqual([row.summary for row in serial], [row.summary for row in threaded])
        single = backtest(frame, configs[0], prior_for(configs[0]))
        self.assertEqual(serial[0].summary, single.summary)

    def test_failing_configuration_is_reported(self):
        configs = [ModelConfig(p=2, d=1, delta=0.98, beta=0.9), ModelConfig(p=2, d=5, delta=0.98, beta=0.9)]
        rows = backtest_grid(np.random.default_rng(2).normal(size=(6, 2)), configs)
        self.assertEqual(rows[0].error, '')
        self.assertIn('d + 2', rows[1].error)
        self.assertEqual(rows[1].summary, {})

    def test_default_prior_when_none_given(self):
        config = ModelConfig(p=2, d=1, delta=0.98, beta=0.9)
        values = np.random.default_rng(3).normal(scale=0.01, size=(40, 2))
        (row,) = backtest_grid(values, [config], strategies='ewp')
        self.assertEqual(row.summary, backtest(values, config, default_prior(config), strategies='ewp').summary)
