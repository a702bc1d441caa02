"""Tests for the linear-Gaussian engine: filter, smoother draws, oracles.

Ground truth throughout comes from dense multivariate-normal algebra
built directly in the tests.  The stationary AR(1) prior has mean mu and
covariance  sigma2/(1-phi^2) * phi**|i-j|,  and conditioning on noisy
observations is done in precision form, which shares no code with the
recursive implementations being tested.
"""

import math

import numpy as np
import pytest
from scipy import stats

from umsampler.ssm import (
    ARParams,
    PseudoObservations,
    StationarityError,
    kalman_loglik,
    marginal_loglik_oracle,
    simulate_ar1,
    simulation_smoother,
    smooth_mean,
    smoother_moments_oracle,
)


def prior_moments(alpha: ARParams, n: int):
    idx = np.arange(n)
    cov = alpha.stationary_var * alpha.phi ** np.abs(idx[:, None] - idx[None, :])
    return np.full(n, alpha.mu), cov


def posterior_moments(pseudo: PseudoObservations, alpha: ARParams):
    """Precision-form conditioning, independent of the package oracles."""
    mean0, cov0 = prior_moments(alpha, pseudo.n)
    prec = np.linalg.inv(cov0) + np.diag(1.0 / pseudo.variances)
    cov = np.linalg.inv(prec)
    mean = cov @ (np.linalg.solve(cov0, mean0) + pseudo.values / pseudo.variances)
    return mean, cov


@pytest.fixture
def small_system():
    rng = np.random.default_rng(7)
    alpha = ARParams(mu=-0.4, phi=0.9, sig2=0.5)
    obs = rng.normal(-0.4, 1.5, 5)
    var = rng.uniform(0.3, 4.0, 5)
    return PseudoObservations(values=obs, variances=var), alpha


class TestARParams:
    def test_stationary_var(self):
        a = ARParams(mu=0.0, phi=0.5, sig2=0.75)
        assert a.stationary_var == pytest.approx(1.0)

    def test_rejects_unit_root(self):
        with pytest.raises(StationarityError):
            ARParams(mu=0.0, phi=1.0, sig2=1.0)
        with pytest.raises(StationarityError):
            ARParams(mu=0.0, phi=-1.2, sig2=1.0)


class TestKalmanLoglik:
    def test_single_observation_closed_form(self):
        alpha = ARParams(mu=1.3, phi=0.8, sig2=0.36)
        pseudo = PseudoObservations(values=np.array([0.2]), variances=np.array([2.0]))
        want = stats.norm.logpdf(0.2, loc=1.3,
                                 scale=math.sqrt(alpha.stationary_var + 2.0))
        assert kalman_loglik(pseudo, alpha) == pytest.approx(want, rel=1e-12)

    def test_empty_series(self):
        pseudo = PseudoObservations(values=np.empty(0), variances=np.empty(0))
        assert kalman_loglik(pseudo, ARParams(mu=0.0, phi=0.5, sig2=1.0)) == 0.0

    def test_against_dense_mvn(self):
        rng = np.random.default_rng(123)
        for _ in range(100):
            n = int(rng.integers(1, 11))
            alpha = ARParams(mu=rng.normal(0, 1),
                             phi=rng.uniform(-0.95, 0.98),
                             sig2=rng.uniform(0.05, 2.0))
            pseudo = PseudoObservations(values=rng.normal(0, 2, n),
                                        variances=rng.uniform(0.1, 8.0, n))
            mean0, cov0 = prior_moments(alpha, n)
            want = stats.multivariate_normal.logpdf(
                pseudo.values, mean=mean0, cov=cov0 + np.diag(pseudo.variances))
            assert kalman_loglik(pseudo, alpha) == pytest.approx(want, abs=1e-8)
            assert marginal_loglik_oracle(pseudo, alpha) == pytest.approx(want, abs=1e-8)


class TestSmootherMean:
    def test_matches_precision_form(self, small_system):
        pseudo, alpha = small_system
        want, _ = posterior_moments(pseudo, alpha)
        np.testing.assert_allclose(smooth_mean(pseudo, alpha), want, atol=1e-10)

    def test_oracle_matches_precision_form(self, small_system):
        pseudo, alpha = small_system
        want_mean, want_cov = posterior_moments(pseudo, alpha)
        mean, cov = smoother_moments_oracle(pseudo, alpha)
        np.testing.assert_allclose(mean, want_mean, atol=1e-10)
        np.testing.assert_allclose(cov, want_cov, atol=1e-10)

    def test_oracle_refuses_large_systems(self):
        alpha = ARParams(mu=0.0, phi=0.5, sig2=1.0)
        pseudo = PseudoObservations(values=np.zeros(51), variances=np.ones(51))
        with pytest.raises(ValueError):
            smoother_moments_oracle(pseudo, alpha)


class TestSimulationSmoother:
    N_DRAWS = 20000

    def test_moments(self, small_system):
        pseudo, alpha = small_system
        want_mean, want_cov = posterior_moments(pseudo, alpha)
        rng = np.random.default_rng(2024)
        draws = np.array([simulation_smoother(pseudo, alpha, rng)
                          for _ in range(self.N_DRAWS)])
        se = np.sqrt(np.diag(want_cov) / self.N_DRAWS)
        assert np.all(np.abs(draws.mean(axis=0) - want_mean) < 4.0 * se)
        emp_cov = np.cov(draws.T)
        rel = np.linalg.norm(emp_cov - want_cov) / np.linalg.norm(want_cov)
        assert rel < 0.08

    def test_tiny_noise_pins_draw_to_observations(self):
        alpha = ARParams(mu=0.0, phi=0.9, sig2=0.4)
        obs = np.array([1.0, -2.0, 0.5, 3.0])
        pseudo = PseudoObservations(values=obs, variances=np.full(4, 1e-16))
        draw = simulation_smoother(pseudo, alpha, np.random.default_rng(0))
        np.testing.assert_allclose(draw, obs, atol=1e-6)

    def test_huge_noise_recovers_prior(self):
        alpha = ARParams(mu=2.0, phi=0.8, sig2=0.36)
        pseudo = PseudoObservations(values=np.zeros(3), variances=np.full(3, 1e12))
        rng = np.random.default_rng(5)
        draws = np.array([simulation_smoother(pseudo, alpha, rng)
                          for _ in range(20000)])
        sv = alpha.stationary_var
        assert draws[:, 0].mean() == pytest.approx(2.0, abs=4 * math.sqrt(sv / 20000))
        assert draws[:, 0].var() == pytest.approx(sv, rel=0.05)
        # neighbour correlation reproduces phi
        r = np.corrcoef(draws[:, 0], draws[:, 1])[0, 1]
        assert r == pytest.approx(0.8, abs=0.02)

    def test_deterministic_given_seed(self, small_system):
        pseudo, alpha = small_system
        d1 = simulation_smoother(pseudo, alpha, np.random.default_rng(99))
        d2 = simulation_smoother(pseudo, alpha, np.random.default_rng(99))
        np.testing.assert_array_equal(d1, d2)


class TestSimulateAR1:
    def test_long_run_moments(self):
        alpha = ARParams(mu=0.5, phi=0.97, sig2=0.09)
        h = simulate_ar1(alpha, 100000, np.random.default_rng(31))
        sv = alpha.stationary_var
        assert h.mean() == pytest.approx(0.5, abs=0.15)
        assert h.var() == pytest.approx(sv, rel=0.1)
        r1 = np.corrcoef(h[:-1], h[1:])[0, 1]
        assert r1 == pytest.approx(0.97, abs=0.01)

    def test_deterministic_given_seed(self):
        alpha = ARParams(mu=0.0, phi=0.5, sig2=1.0)
        a = simulate_ar1(alpha, 50, np.random.default_rng(4))
        b = simulate_ar1(alpha, 50, np.random.default_rng(4))
        np.testing.assert_array_equal(a, b)


class TestPseudoObservations:
    def test_rejects_nonpositive_variance(self):
        with pytest.raises(ValueError):
            PseudoObservations(values=np.zeros(2), variances=np.array([1.0, 0.0]))

    def test_rejects_length_mismatch(self):
        with pytest.raises(ValueError):
            PseudoObservations(values=np.zeros(3), variances=np.ones(2))
