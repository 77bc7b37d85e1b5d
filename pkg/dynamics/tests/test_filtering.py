import numpy as np
from django.test import SimpleTestCase

from dynamics.exceptions import DataError
from dynamics.filtering import (
    FilterOptions,
    PosteriorState,
    evolve,
    initial_state,
    iter_filter,
    run_filter,
    spread_bound,
    update,
)
from dynamics.forecast import forecast_path
from dynamics.model_core import ModelConfig, Prior, build_design, default_prior


def scalar_discount_dlm(y, delta, beta, m0, P0, S0):
    """Univariate discount DLM with an intercept and one lag, written out by hand."""
    m = np.array(m0, dtype=float).ravel()
    P = np.array(P0, dtype=float)
    S = float(S0)
    out = []
    for t in range(1, len(y)):
        F = np.array([1.0, y[t - 1]])
        R = P / delta
        Q = F @ R @ F + 1.0
        A = R @ F / Q
        e = y[t] - F @ m
        m = m + A * e
        P = R - np.outer(A, A) * Q
        S = beta * S + e * e / Q
        out.append((m.copy(), P.copy(), S))
    return out


class EvolveTests(SimpleTestCase):

    def state(self, P, p):
        return PosteriorState(t=1, m=np.zeros((P.shape[0], p)), P=P, S=np.eye(p), history=np.zeros((1, p)))

    def test_identity_discount_keeps_spread(self):
        config = ModelConfig(p=2, d=1, delta=1.0, beta=0.9)
        P = np.diag([2.0, 3.0, 5.0])
        R, _ = evolve(self.state(P, 2), config)
        np.testing.assert_array_equal(R, P)

    def test_quarter_discount_quadruples_spread(self):
        config = ModelConfig(p=1, d=1, delta=0.25, beta=0.9)
        R, S_prior = evolve(self.state(np.eye(2), 1), config)
        np.testing.assert_allclose(R, 4.0 * np.eye(2), rtol=1e-15)
        np.testing.assert_allclose(S_prior, [[0.9]], rtol=1e-14)

    def test_scalar_discount_expanded(self):
        config = ModelConfig(p=2, d=1, delta=0.98, beta=0.9)
        P = np.diag([2.0, 3.0, 5.0])
        R, _ = evolve(self.state(P, 2), config)
        np.testing.assert_allclose(R, P / 0.98, rtol=1e-14)


class UpdateTests(SimpleTestCase):

    def setUp(self):
        self.config = ModelConfig(p=2, d=1, delta=0.95, beta=0.9)
        self.prior = default_prior(self.config)
        rng = np.random.default_rng(0)
        self.values = rng.normal(size=(20, 2))

    def test_update_does_not_modify_input_state(self):
        state = initial_state(self.values, self.config, self.prior)
        m, P, S = state.m.copy(), state.P.copy(), state.S.copy()
        update(state, self.values[1], self.config)
        np.testing.assert_array_equal(state.m, m)
        np.testing.assert_array_equal(state.P, P)
        np.testing.assert_array_equal(state.S, S)

    def test_single_step_formulas(self):
        state = initial_state(self.values, self.config, self.prior)
        new_state, step = update(state, self.values[1], self.config)
        f = np.concatenate([[1.0], self.values[0]])
        R = self.prior.P / 0.95
        Q = f @ R @ f + 1.0
        self.assertAlmostEqual(step.Q, Q, places=9)
        np.testing.assert_allclose(step.e, self.values[1], atol=1e-12)
        np.testing.assert_allclose(new_state.S, np.eye(2) / 1.1 + np.outer(self.values[1], self.values[1]) / Q, rtol=1e-10)
        self.assertEqual(new_state.t, 2)
        np.testing.assert_array_equal(new_state.history[0], self.values[1])

    def test_scalar_hand_example(self):
        config = ModelConfig(p=1, d=1, delta=1.0, beta=0.9)
        prior = Prior(m=np.zeros((2, 1)), P=np.eye(2), S=np.array([[1.0]]))
        state = initial_state(np.zeros((2, 1)), config, prior)
        new_state, step = update(state, np.zeros(1), config)
        self.assertEqual(step.Q, 2.0)
        np.testing.assert_array_equal(step.e, [0.0])
        np.testing.assert_array_equal(new_state.m, np.zeros((2, 1)))
        np.testing.assert_array_equal(new_state.P, np.diag([0.5, 1.0]))
        self.assertAlmostEqual(new_state.S[0, 0], 0.9, places=14)

    def test_wrong_observation_dimension(self):
        state = initial_state(self.values, self.config, self.prior)
        with self.assertRaises(DataError):
            update(state, np.zeros(3), self.config)

    def test_short_series(self):
        config = ModelConfig(p=2, d=3, delta=0.95, beta=0.9)
        with self.assertRaises(DataError):
            run_filter(self.values[:3], config, default_prior(config))

    def test_dimension_mismatch(self):
        config = ModelConfig(p=3, d=1, delta=0.95, beta=0.9)
        with self.assertRaises(DataError):
            run_filter(self.values, config, default_prior(config))


class RecursionTests(SimpleTestCase):

    def test_woodbury_identity(self):
        rng = np.random.default_rng(11)
        worst = 0.0
        for p in (1, 2, 5):
            for d in (1, 2, 5):
                config = ModelConfig(p=p, d=d, delta=0.95, beta=0.9)
                prior = Prior(m=np.zeros((config.dim, p)), P=np.eye(config.dim), S=np.eye(p))
                values = rng.normal(size=(d + 112, p))
                previous = initial_state(values, config, prior)
                for state, step in iter_filter(values, config, prior):
                    f = build_design(previous.history, p=p, d=d)
                    P_inv = np.linalg.inv(state.P)
                    residual = P_inv - np.linalg.inv(step.R) - np.outer(f, f)
                    worst = max(worst, np.linalg.norm(residual) / np.linalg.norm(P_inv))
                    previous = state
        self.assertLess(worst, 1e-8)

    def test_matches_scalar_discount_dlm(self):
        rng = np.random.default_rng(5)
        y = np.zeros(501)
        for t in range(1, 501):
            y[t] = 0.1 + 0.6 * y[t - 1] + 0.5 * rng.normal()
        config = ModelConfig(p=1, d=1, delta=0.97, beta=0.9)
        prior = Prior(m=np.array([[0.0], [0.3]]), P=np.eye(2), S=np.array([[0.5]]))

        run = run_filter(y.reshape(-1, 1), config, prior)
        oracle = scalar_discount_dlm(y, 0.97, 0.9, prior.m, prior.P, prior.S[0, 0])

        self.assertEqual(len(run.snapshots) - 1, len(oracle))
        for state, (m, P, S) in zip(run.snapshots[1:], oracle):
            np.testing.assert_allclose(state.m.ravel(), m, rtol=0, atol=1e-10)
            np.testing.assert_allclose(state.P, P, rtol=0, atol=1e-10)
            self.assertLess(abs(state.S[0, 0] - S), 1e-10)

    def test_posterior_matrices_stay_symmetric_positive_definite(self):
        rng = np.random.default_rng(8)
        config = ModelConfig(p=3, d=2, delta=0.99, beta=0.95)
        values = rng.normal(size=(300, 3))
        for state, _ in iter_filter(values, config, default_prior(config)):
            np.testing.assert_array_equal(state.P, state.P.T)
            np.testing.assert_array_equal(state.S, state.S.T)
            self.assertGreater(np.linalg.eigvalsh(state.P)[0], 0.0)
            self.assertGreater(np.linalg.eigvalsh(state.S)[0], 0.0)

    def test_identical_observations_only_discount_volatility(self):
        level = np.array([0.3, -0.2])
        values = np.tile(level, (25, 1))
        config = ModelConfig(p=2, d=1, delta=0.97, beta=0.9)
        m = np.zeros((config.dim, 2))
        m[0] = level
        S = np.array([[0.5, 0.1], [0.1, 0.4]])
        prior = Prior(m=m, P=0.1 * np.eye(config.dim), S=S)
        for state, step in iter_filter(values, config, prior):
            np.testing.assert_array_equal(step.e, 0.0)
            np.testing.assert_array_equal(state.m, m)
            np.testing.assert_allclose(state.S, S * config.k ** -(state.t - config.d), rtol=1e-12)

    def test_relabelling_permutes_posterior_and_forecasts(self):
        rng = np.random.default_rng(14)
        p, d = 3, 2
        config = ModelConfig(p=p, d=d, delta=0.97, beta=0.9)
        order = [2, 0, 1]
        rows = [0] + [1 + lag * p + j for lag in range(d) for j in order]

        A = rng.normal(size=(config.dim, config.dim))
        B = rng.normal(size=(p, p))
        prior = Prior(m=rng.normal(size=(config.dim, p)), P=A @ A.T + np.eye(config.dim), S=B @ B.T + np.eye(p))
        relabelled = Prior(
            m=prior.m[rows][:, order],
            P=prior.P[np.ix_(rows, rows)],
            S=prior.S[np.ix_(order, order)],
        )
        values = rng.normal(size=(80, p))

        final = run_filter(values, config, prior).final
        permuted = run_filter(values[:, order], config, relabelled).final
        np.testing.assert_allclose(permuted.m, final.m[rows][:, order], rtol=1e-9, atol=1e-12)
        np.testing.assert_allclose(permuted.P, final.P[np.ix_(rows, rows)], rtol=1e-9, atol=1e-12)
        np.testing.assert_allclose(permuted.S, final.S[np.ix_(order, order)], rtol=1e-9, atol=1e-12)

        for result, relabelled_result in zip(forecast_path(final, config, 3), forecast_path(permuted, config, 3)):
            np.testing.assert_allclose(relabelled_result.mean, result.mean[order], rtol=1e-9, atol=1e-12)
            np.testing.assert_allclose(
                relabelled_result.covariance, result.covariance[np.ix_(order, order)], rtol=1e-9, atol=1e-12,
            )

    def test_spread_stays_below_bound(self):
        rng = np.random.default_rng(9)
        config = ModelConfig(p=2, d=2, delta=0.9, beta=0.9)
        prior = default_prior(config)
        values = np.clip(rng.normal(size=(400, 2)), -3.0, 3.0)
        bound = spread_bound(values, config, prior)
        largest = max(
            np.linalg.norm(np.linalg.inv(state.P), 2)
            for state, _ in iter_filter(values, config, prior)
        )
        self.assertLessEqual(largest, bound)

    def test_spread_bound_infinite_without_discounting(self):
        config = ModelConfig(p=1, d=1, delta=1.0, beta=0.9)
        self.assertEqual(spread_bound(np.ones((10, 1)), config, default_prior(config)), np.inf)


class RunFilterTests(SimpleTestCase):

    def setUp(self):
        self.config = ModelConfig(p=2, d=2, delta=0.98, beta=0.9)
        self.prior = default_prior(self.config)
        self.values = np.random.default_rng(1).normal(size=(50, 2))

    def test_snapshots_cover_t_d_to_n(self):
        run = run_filter(self.values, self.config, self.prior)
        self.assertEqual([state.t for state in run.snapshots], list(range(2, 51)))
        self.assertEqual([step.t for step in run.diagnostics], list(range(3, 51)))
        self.assertIs(run.final, run.snapshots[-1])

    def test_thinning_keeps_final_state(self):
        run = run_filter(self.values, self.config, self.prior, FilterOptions(snapshot_every=7))
        self.assertEqual(run.snapshots[0].t, 2)
        self.assertEqual(run.snapshots[-1].t, 50)
        self.assertTrue(all((s.t - 2) % 7 == 0 for s in run.snapshots[:-1]))

    def test_no_snapshots(self):
        run = run_filter(self.values, self.config, self.prior, FilterOptions(snapshot_every=0))
        self.assertEqual(run.snapshots, [])
        self.assertEqual(run.final.t, 50)

    def test_deterministic(self):
        first = run_filter(self.values, self.config, self.prior)
        second = run_filter(self.values, self.config, self.prior)
        np.testing.assert_array_equal(first.final.m, second.final.m)
        np.testing.assert_array_equal(first.final.S, second.final.S)

    def test_time_invariant_state(self):
        config = ModelConfig(p=2, d=1, delta=1.0, beta=0.9)
        run = run_filter(self.values, config, default_prior(config))
        self.assertTrue(np.all(np.isfinite(run.final.m)))

    def test_large_q_warns(self):
        with self.assertLogs('dynamics.filtering', level='WARNING'):
            run_filter(self.values, self.config, self.prior, FilterOptions(q_warn_threshold=1.0))
