"""Inefficiency factors, posterior summaries, and the joint-distribution
check harness.

The IF oracle is the AR(1) identity: a chain with lag-one correlation
rho has inefficiency (1+rho)/(1-rho), so a simulated phi=0.9 chain must
come out near 19.
"""

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from umsampler.diagnostics import (
    DegenerateChainError,
    GirConfig,
    _two_sample_chi2,
    format_summary_table,
    inefficiency_factor,
    posterior_summary,
)
from umsampler.models import Family, ModelSpec, simulate_durations
from umsampler.sampler import MCMCConfig, Priors, run_chain
from umsampler.ssm import ARParams, simulate_ar1


class TestInefficiencyFactor:
    def test_iid_is_near_one(self):
        x = np.random.default_rng(1).standard_normal(100000)
        assert inefficiency_factor(x) == pytest.approx(1.0, abs=0.05)

    def test_ar1_matches_theory(self):
        # (1 + phi) / (1 - phi) = 19 for phi = 0.9
        h = simulate_ar1(ARParams(mu=0.0, phi=0.9, sig2=0.19), 1000000,
                         np.random.default_rng(8))
        assert inefficiency_factor(h) == pytest.approx(19.0, rel=0.10)

    def test_antithetic_chain_beats_iid(self):
        x = np.empty(10000)
        x[0::2] = 1.0
        x[1::2] = -1.0
        x += np.random.default_rng(2).normal(0, 0.1, 10000)
        assert inefficiency_factor(x) < 0.2

    @given(st.floats(-3, 3), st.floats(0.1, 10))
    @settings(max_examples=20, deadline=None)
    def test_affine_invariance(self, shift, scale):
        x = np.random.default_rng(55).standard_normal(500)
        assert inefficiency_factor(shift + scale * x) == pytest.approx(
            inefficiency_factor(x), rel=1e-9)

    def test_constant_chain_raises(self):
        with pytest.raises(DegenerateChainError):
            inefficiency_factor(np.ones(500))

    def test_short_chain_raises(self):
        with pytest.raises(ValueError):
            inefficiency_factor(np.random.default_rng(0).standard_normal(99))

    def test_bandwidth_override(self):
        x = np.random.default_rng(3).standard_normal(5000)
        a = inefficiency_factor(x, bandwidth=50)
        b = inefficiency_factor(x, bandwidth=500)
        assert a != b  # different windows, both finite
        assert np.isfinite(a) and np.isfinite(b)


@pytest.fixture(scope="module")
def store():
    spec = ModelSpec(family=Family.WEIBULL, shape=0.5)
    alpha = ARParams(mu=0.0, phi=0.95, sig2=0.09)
    data, _ = simulate_durations(spec, alpha, 60, np.random.default_rng(9))
    cfg = MCMCConfig(n_burnin=100, n_draws=400)
    return run_chain(data, spec, Priors(), cfg, 4, monitor=(10, 30))


class TestPosteriorSummary:
    def test_rows_match_numpy(self, store):
        rows = {r.name: r for r in posterior_summary(store)}
        assert rows["mu"].mean == pytest.approx(store.mu.mean())
        assert rows["mu"].sd == pytest.approx(store.mu.std(ddof=1))
        assert rows["phi"].q025 == pytest.approx(np.quantile(store.phi, 0.025))
        assert rows["phi"].q975 == pytest.approx(np.quantile(store.phi, 0.975))
        assert "h_10" in rows and "h_30" in rows

    def test_truth_column_wiring(self, store):
        rows = {r.name: r for r in posterior_summary(
            store, truth={"mu": 0.0, "h_10": -0.3})}
        assert rows["mu"].true == 0.0
        assert rows["h_10"].true == -0.3
        assert rows["phi"].true is None

    def test_shape_row_uses_family_label(self, store):
        text = format_summary_table(posterior_summary(store))
        assert "gamma" in text
        assert "zeta" not in text

    def test_if_present_for_long_chains(self, store):
        rows = {r.name: r for r in posterior_summary(store)}
        assert rows["sigma"].if_value is not None
        assert rows["sigma"].if_value > 0


class TestTwoSampleChi2:
    def test_same_distribution_accepted(self):
        rng = np.random.default_rng(21)
        a = rng.standard_normal(8000)
        b = rng.standard_normal(8000)
        stat, p = _two_sample_chi2(a, b, n_eff_b=8000.0)
        assert p > 0.01

    def test_shifted_distribution_rejected(self):
        rng = np.random.default_rng(22)
        a = rng.standard_normal(8000)
        b = rng.standard_normal(8000) + 0.25
        stat, p = _two_sample_chi2(a, b, n_eff_b=8000.0)
        assert p < 1e-6

    def test_ess_discount_weakens_evidence(self):
        rng = np.random.default_rng(23)
        a = rng.standard_normal(4000)
        b = rng.standard_normal(4000) + 0.1
        _, p_full = _two_sample_chi2(a, b, n_eff_b=4000.0)
        _, p_tenth = _two_sample_chi2(a, b, n_eff_b=400.0)
        assert p_tenth > p_full


class TestGirConfigDefaults:
    def test_tame_priors(self):
        cfg = GirConfig()
        assert cfg.priors.sig2_a == 3.0
        assert cfg.priors.shape_lo == 0.3 and cfg.priors.shape_hi == 2.5
        assert cfg.spec.family == Family.WEIBULL
        assert cfg.mh_power == 1.0
