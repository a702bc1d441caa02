"""Slice-sampler baseline: invariance and agreement checks.

Three angles.  With the likelihood switched off the sweep must leave the
AR(1) prior invariant, so long-run moments are known exactly.  With a
single site the posterior is one-dimensional and a fine grid gives its
CDF, so the chain's marginal can be tested by Kolmogorov-Smirnov.  And
on real data the slice chain and the mixture chain must agree on the
latent posterior, giving a two-route consistency check.
"""

import math

import numpy as np
import pytest

from umsampler.baseline import _slice_sweep, run_ss_chain, slice_update_path
from umsampler.models import Dataset, Family, ModelSpec, simulate_durations
from umsampler.sampler import MCMCConfig, Priors, run_chain
from umsampler.ssm import ARParams


def _sweep_chain(h0, y, fam, shape, alpha, n_sweeps, seed, thin=1):
    """Drive the jit sweep directly; returns kept paths, one row per sweep."""
    rng = np.random.default_rng(seed)
    h = h0.copy()
    out = []
    for i in range(n_sweeps):
        _slice_sweep(h, y, fam, shape, alpha.mu, alpha.phi, alpha.sig2,
                     1.0, 50, int(rng.integers(0, 2**31 - 1)))
        if i % thin == 0:
            out.append(h.copy())
    return np.array(out)


class TestFlatLikelihood:
    """Family code -1 short-circuits the observation term."""

    def test_prior_is_invariant(self):
        alpha = ARParams(mu=1.0, phi=0.8, sig2=0.36)  # stationary var 1.0
        y = np.zeros(5)
        draws = _sweep_chain(np.zeros(5), y, -1, 1.0, alpha, 30000, seed=10)
        kept = draws[1000:]
        assert kept[:, 0].mean() == pytest.approx(1.0, abs=0.06)
        assert kept[:, 2].mean() == pytest.approx(1.0, abs=0.06)
        assert kept[:, 0].var() == pytest.approx(1.0, rel=0.08)
        r = np.corrcoef(kept[:, 1], kept[:, 2])[0, 1]
        assert r == pytest.approx(0.8, abs=0.03)


class TestSingleSiteOracle:
    def test_marginal_matches_grid_cdf(self):
        # exponential observation y=2.5 against the stationary prior
        alpha = ARParams(mu=0.0, phi=0.9, sig2=0.19)
        y = np.array([2.5])
        grid = np.arange(-8.0, 8.0, 0.002)
        log_post = -grid - 2.5 * np.exp(-grid) \
            - 0.5 * (grid - alpha.mu) ** 2 / alpha.stationary_var
        dens = np.exp(log_post - log_post.max())
        cdf = np.cumsum(dens)
        cdf /= cdf[-1]

        draws = _sweep_chain(np.zeros(1), y, 0, 1.0, alpha, 30000, seed=3, thin=5)
        x = np.sort(draws[:, 0])
        emp = np.arange(1, x.size + 1) / x.size
        oracle = np.interp(x, grid, cdf)
        ks = np.max(np.abs(emp - oracle))
        assert ks < 0.03, ks


class TestTwoRoutesAgree:
    def test_latent_posterior_means(self):
        spec = ModelSpec(family=Family.WEIBULL, shape=0.7)
        alpha = ARParams(mu=0.0, phi=0.9, sig2=0.09)
        data, _ = simulate_durations(spec, alpha, 40, np.random.default_rng(14))
        cfg = MCMCConfig(n_burnin=1000, n_draws=8000)
        mon = (10, 25, 40)
        ums = run_chain(data, spec, Priors(), cfg, 100, fix_alpha=alpha,
                        sample_shape_flag=False, monitor=mon)
        ss = run_ss_chain(data, spec, Priors(), cfg, 200, fix_alpha=alpha,
                          sample_shape_flag=False, monitor=mon)
        for j in range(3):
            mu_u = ums.h_monitored[:, j].mean()
            mu_s = ss.h_monitored[:, j].mean()
            assert mu_u == pytest.approx(mu_s, abs=0.08), (j, mu_u, mu_s)
            sd_u = ums.h_monitored[:, j].std()
            sd_s = ss.h_monitored[:, j].std()
            assert sd_u == pytest.approx(sd_s, rel=0.15), (j, sd_u, sd_s)


class TestSliceUpdatePath:
    SPEC = ModelSpec(family=Family.GAMMA, shape=1.5)
    ALPHA = ARParams(mu=0.0, phi=0.9, sig2=0.09)

    def _data(self):
        data, h = simulate_durations(self.SPEC, self.ALPHA, 30,
                                     np.random.default_rng(5))
        return data, h

    def test_input_not_mutated(self):
        data, h = self._data()
        before = h.copy()
        out, fails = slice_update_path(h, data, self.SPEC, self.ALPHA,
                                       np.random.default_rng(1))
        np.testing.assert_array_equal(h, before)
        assert out.shape == h.shape
        assert not np.array_equal(out, h)

    def test_no_failures_on_tame_problem(self):
        data, h = self._data()
        rng = np.random.default_rng(2)
        total = 0
        for _ in range(50):
            h, fails = slice_update_path(h, data, self.SPEC, self.ALPHA, rng)
            total += fails
        assert total == 0

    def test_deterministic_given_seed(self):
        data, h = self._data()
        a, _ = slice_update_path(h, data, self.SPEC, self.ALPHA,
                                 np.random.default_rng(42))
        b, _ = slice_update_path(h, data, self.SPEC, self.ALPHA,
                                 np.random.default_rng(42))
        np.testing.assert_array_equal(a, b)


class TestRunSSChain:
    SPEC = ModelSpec(family=Family.WEIBULL, shape=0.5)
    ALPHA = ARParams(mu=0.0, phi=0.95, sig2=0.09)

    def _data(self):
        data, _ = simulate_durations(self.SPEC, self.ALPHA, 50,
                                     np.random.default_rng(33))
        return data

    def test_deterministic_given_seed(self):
        cfg = MCMCConfig(n_burnin=10, n_draws=30)
        a = run_ss_chain(self._data(), self.SPEC, Priors(), cfg, 7,
                         fix_alpha=self.ALPHA)
        b = run_ss_chain(self._data(), self.SPEC, Priors(), cfg, 7,
                         fix_alpha=self.ALPHA)
        np.testing.assert_array_equal(a.h_monitored, b.h_monitored)
        np.testing.assert_array_equal(a.shape, b.shape)

    def test_alpha_columns_fixed(self):
        cfg = MCMCConfig(n_burnin=5, n_draws=20)
        store = run_ss_chain(self._data(), self.SPEC, Priors(), cfg, 7,
                             fix_alpha=self.ALPHA)
        assert np.all(store.mu == self.ALPHA.mu)
        assert np.all(store.phi == self.ALPHA.phi)
        assert np.all(store.sigma == math.sqrt(self.ALPHA.sig2))

    def test_shape_held_when_not_sampled(self):
        cfg = MCMCConfig(n_burnin=5, n_draws=20)
        store = run_ss_chain(self._data(), self.SPEC, Priors(), cfg, 7,
                             fix_alpha=self.ALPHA, sample_shape_flag=False)
        assert np.all(store.shape == 0.5)

    def test_counts_track_sweeps(self):
        cfg = MCMCConfig(n_burnin=5, n_draws=20)
        store = run_ss_chain(self._data(), self.SPEC, Priors(), cfg, 7,
                             fix_alpha=self.ALPHA)
        assert store.counts["sweeps"] == 25
        assert store.counts["slice_failures"] >= 0
