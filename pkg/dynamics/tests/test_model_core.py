import numpy as np
from django.test import SimpleTestCase

from dynamics.exceptions import ConfigurationError, DataError
from dynamics.model_core import ModelConfig, Prior, build_design, default_prior, derive_constants

BETA_GRID = np.round(np.arange(0.70, 0.991, 0.01), 2)


class DeriveConstantsTests(SimpleTestCase):

    def test_bivariate_constants(self):
        n, k = derive_constants(2, 0.9)
        self.assertAlmostEqual(n, 10.0, places=12)
        self.assertAlmostEqual(k, 1.1, places=12)

    def test_univariate_k_is_inverse_beta(self):
        n, k = derive_constants(1, 0.9)
        self.assertAlmostEqual(n, 10.0, places=12)
        self.assertAlmostEqual(k, 1.0 / 0.9, places=12)

    def test_low_beta(self):
        n, k = derive_constants(2, 0.7)
        self.assertAlmostEqual(n, 10.0 / 3.0, places=12)
        self.assertAlmostEqual(k, 1.3, places=12)

    def test_inverted_wishart_mean_identity(self):
        for p in (1, 2, 8):
            for beta in BETA_GRID:
                n, _ = derive_constants(p, beta)
                self.assertLess(abs(1.0 / (beta * n - 2.0) - (1.0 - beta) / (3.0 * beta - 2.0)), 1e-12)

    def test_k_at_least_one_and_tends_to_one(self):
        for p in (1, 2, 5, 8):
            ks = [derive_constants(p, beta)[1] for beta in BETA_GRID]
            self.assertTrue(all(k >= 1.0 for k in ks))
            self.assertLess(abs(derive_constants(p, 0.99999)[1] - 1.0), 1e-3)

    def test_rejects_out_of_range(self):
        for beta in (0.5, 2.0 / 3.0, 1.0, 1.2):
            with self.assertRaises(ConfigurationError):
                derive_constants(2, beta)
        with self.assertRaises(ConfigurationError):
            derive_constants(0, 0.9)


class ModelConfigTests(SimpleTestCase):

    def test_scalar_delta_expands(self):
        config = ModelConfig(p=2, d=3, delta=0.98, beta=0.9)
        self.assertEqual(config.dim, 7)
        np.testing.assert_array_equal(config.delta, np.full(7, 0.98))
        np.testing.assert_array_equal(config.discount_matrix, 0.98 * np.eye(7))

    def test_delta_one_is_allowed(self):
        config = ModelConfig(p=1, d=1, delta=1.0, beta=0.9)
        self.assertEqual(config.delta.tolist(), [1.0, 1.0])

    def test_delta_length_checked(self):
        with self.assertRaises(ConfigurationError):
            ModelConfig(p=2, d=1, delta=[0.9, 0.9], beta=0.9)

    def test_delta_range_checked(self):
        with self.assertRaises(ConfigurationError):
            ModelConfig(p=1, d=1, delta=[0.9, 1.1], beta=0.9)

    def test_delta_is_read_only(self):
        config = ModelConfig(p=1, d=1, delta=0.9, beta=0.9)
        with self.assertRaises(ValueError):
            config.delta[0] = 0.5

    def test_positive_quantities_on_grid(self):
        for p in (1, 2, 5, 8):
            for beta in BETA_GRID:
                config = ModelConfig(p=p, d=1, delta=0.98, beta=float(beta))
                self.assertGreater(config.n, 2.0)
                self.assertGreater(3.0 * beta - 2.0, 0.0)

    def test_label_and_dict(self):
        config = ModelConfig(p=2, d=2, delta=0.98, beta=0.9)
        self.assertEqual(config.label(), 'd=2 delta=0.98 beta=0.9')
        self.assertEqual(ModelConfig(**config.to_dict()).label(), config.label())


class BuildDesignTests(SimpleTestCase):

    def test_examples(self):
        np.testing.assert_array_equal(build_design([[3.0, 4.0]], p=2, d=1), [1, 3, 4])
        np.testing.assert_array_equal(build_design([5.0, 7.0], p=1, d=2), [1, 5, 7])
        np.testing.assert_array_equal(build_design([[1, 2], [3, 4]], p=2, d=2), [1, 1, 2, 3, 4])

    def test_first_element_is_one(self):
        rng = np.random.default_rng(3)
        self.assertEqual(build_design(rng.normal(size=(4, 3)))[0], 1.0)

    def test_sliding_window_shifts_lag_blocks(self):
        rng = np.random.default_rng(4)
        series = rng.normal(size=(10, 3))
        d, p = 3, 3
        earlier = build_design(series[5 - d:5][::-1], p=p, d=d)
        later = build_design(series[6 - d:6][::-1], p=p, d=d)
        np.testing.assert_array_equal(later[1 + p:], earlier[1:1 + (d - 1) * p])
        np.testing.assert_array_equal(later[1:1 + p], series[5])

    def test_dimension_mismatch(self):
        with self.assertRaises(DataError):
            build_design([[1.0, 2.0]], p=3, d=1)
        with self.assertRaises(DataError):
            build_design([[1.0, 2.0]], p=2, d=2)


class PriorTests(SimpleTestCase):

    def test_default_prior(self):
        prior = default_prior(ModelConfig(p=2, d=1, delta=0.98, beta=0.9))
        np.testing.assert_array_equal(prior.m, np.zeros((3, 2)))
        np.testing.assert_array_equal(prior.P, 1000.0 * np.eye(3))
        np.testing.assert_array_equal(prior.S, np.eye(2))

    def test_initial_belief_passes_through(self):
        belief = [[0.1], [0.5]]
        prior = default_prior(ModelConfig(p=1, d=1, delta=0.98, beta=0.9), initial_belief=belief)
        np.testing.assert_array_equal(prior.m, belief)

    def test_large_dimension(self):
        prior = default_prior(ModelConfig(p=8, d=10, delta=0.98, beta=0.9))
        np.testing.assert_array_equal(prior.P, 1000.0 * np.eye(81))

    def test_validate_rejects_indefinite(self):
        config = ModelConfig(p=1, d=1, delta=0.98, beta=0.9)
        prior = Prior(m=np.zeros((2, 1)), P=np.diag([1.0, -1.0]), S=np.eye(1))
        with self.assertRaises(ConfigurationError):
            prior.validate(config)

    def test_validate_rejects_wrong_shape(self):
        config = ModelConfig(p=2, d=1, delta=0.98, beta=0.9)
        prior = Prior(m=np.zeros((2, 2)), P=np.eye(3), S=np.eye(2))
        with self.assertRaises(ConfigurationError):
            prior.validate(config)
