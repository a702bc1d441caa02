"""Linear-Gaussian AR(1) state-space engine.

Latent dynamics, shared by every model in the package:

    h_1 ~ N(mu, sig2 / (1 - phi^2)),
    h_{t+1} = mu + phi (h_t - mu) + eta_t,     eta_t ~ N(0, sig2),

observed through heteroskedastic pseudo-observations obs_t = h_t + eps_t,
eps_t ~ N(0, var_t).  The Kalman filter gives the exact marginal likelihood
by prediction-error decomposition; posterior draws of the whole path come
from a simulation smoother that adds a smoothed correction to an
unconditionally simulated path.  A dense multivariate-normal oracle for
small n backs all of it in the tests.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numba import njit
from scipy.stats import multivariate_normal

__all__ = [
    "ARParams",
    "PseudoObservations",
    "StationarityError",
    "NumericalError",
    "simulate_ar1",
    "kalman_loglik",
    "smooth_mean",
    "simulation_smoother",
    "smoother_moments_oracle",
    "marginal_loglik_oracle",
]

_LOG_2PI = math.log(2.0 * math.pi)

# LatentPath is just an ndarray of h values; no wrapper type earns its keep here.
LatentPath = np.ndarray


class StationarityError(ValueError):
    """|phi| >= 1: the AR(1) has no stationary distribution."""


class NumericalError(RuntimeError):
    """A filter or smoother recursion produced a non-finite quantity."""


@dataclass(frozen=True)
class ARParams:
    """Stationary AR(1) parameters (mu, phi, sig2)."""

    mu: float
    phi: float
    sig2: float

    def __post_init__(self):
        if not math.isfinite(self.mu):
            raise ValueError("mu must be finite")
        if not (abs(self.phi) < 1.0):
            raise StationarityError("phi must satisfy |phi| < 1, got %r" % (self.phi,))
        if not (self.sig2 > 0.0) or not math.isfinite(self.sig2):
            raise ValueError("sig2 must be a positive finite real")

    @property
    def stationary_var(self) -> float:
        return self.sig2 / (1.0 - self.phi * self.phi)


@dataclass(frozen=True)
class PseudoObservations:
    """Gaussian pseudo-observations: values obs_t with variances var_t."""

    values: np.ndarray
    variances: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        w = np.asarray(self.variances, dtype=float)
        if v.shape != w.shape or v.ndim != 1:
            raise ValueError("values and variances must be 1-d arrays of equal length")
        if not np.all(np.isfinite(v)):
            raise ValueError("values must be finite")
        if not np.all(w > 0.0) or not np.all(np.isfinite(w)):
            raise ValueError("variances must be positive and finite")
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "variances", w)

    @property
    def n(self) -> int:
        return self.values.shape[0]


@njit(cache=True)
def _ar1_path(mu, phi, sig2, z):
    n = z.shape[0]
    h = np.empty(n)
    h[0] = mu + z[0] * math.sqrt(sig2 / (1.0 - phi * phi))
    sd = math.sqrt(sig2)
    for t in range(1, n):
        h[t] = mu + phi * (h[t - 1] - mu) + sd * z[t]
    return h


@njit(cache=True)
def _kalman_pass(obs, var, mu, phi, sig2):
    """Forward filter. Returns (loglik, pred mean, pred var, filt mean, filt var).

    loglik comes back as nan if any innovation variance fails to be a
    positive finite number; the caller turns that into an error.
    """
    n = obs.shape[0]
    a_pred = np.empty(n)
    p_pred = np.empty(n)
    a_filt = np.empty(n)
    p_filt = np.empty(n)
    ll = 0.0
    a = mu
    p = sig2 / (1.0 - phi * phi)
    for t in range(n):
        a_pred[t] = a
        p_pred[t] = p
        f = p + var[t]
        if not (f > 0.0) or not np.isfinite(f):
            return np.nan, a_pred, p_pred, a_filt, p_filt
        v = obs[t] - a
        ll += -0.5 * (_LOG_2PI + np.log(f) + v * v / f)
        k = p / f
        af = a + k * v
        pf = p * (1.0 - k)
        a_filt[t] = af
        p_filt[t] = pf
        a = mu + phi * (af - mu)
        p = phi * phi * pf + sig2
    return ll, a_pred, p_pred, a_filt, p_filt


@njit(cache=True)
def _rts_mean(a_pred, p_pred, a_filt, p_filt, phi):
    """Backward recursion for the smoothed mean E[h | obs]."""
    n = a_filt.shape[0]
    m = np.empty(n)
    m[n - 1] = a_filt[n - 1]
    for t in range(n - 2, -1, -1):
        g = p_filt[t] * phi / p_pred[t + 1]
        m[t] = a_filt[t] + g * (m[t + 1] - a_pred[t + 1])
    return m


def simulate_ar1(alpha: ARParams, n: int, rng: np.random.Generator) -> LatentPath:
    """Draw a length-n path from the stationary AR(1)."""
    if n < 1:
        raise ValueError("n must be >= 1")
    z = rng.standard_normal(n)
    return _ar1_path(alpha.mu, alpha.phi, alpha.sig2, z)


def kalman_loglik(pseudo: PseudoObservations, alpha: ARParams) -> float:
    """Exact log marginal density of the pseudo-observations.  n = 0 gives 0."""
    if pseudo.n == 0:
        return 0.0
    ll, *_ = _kalman_pass(pseudo.values, pseudo.variances, alpha.mu, alpha.phi, alpha.sig2)
    if not math.isfinite(ll):
        raise NumericalError("Kalman filter produced a non-finite innovation variance")
    return float(ll)


def smooth_mean(pseudo: PseudoObservations, alpha: ARParams) -> np.ndarray:
    """E[h | obs] via filter plus backward recursion."""
    ll, a_pred, p_pred, a_filt, p_filt = _kalman_pass(
        pseudo.values, pseudo.variances, alpha.mu, alpha.phi, alpha.sig2)
    if not math.isfinite(ll):
        raise NumericalError("Kalman filter produced a non-finite innovation variance")
    return _rts_mean(a_pred, p_pred, a_filt, p_filt, alpha.phi)


def simulation_smoother(pseudo: PseudoObservations, alpha: ARParams,
                        rng: np.random.Generator) -> LatentPath:
    """One exact draw from p(h | obs).

    Simulate an unconditional path h+ and artificial observations y+ from
    the model, then return  E[h|obs] + (h+ - E[h|y+]).  The correction term
    has exactly the posterior covariance and is independent of obs, so the
    draw is exact, at the price of two smoothing passes.
    """
    n = pseudo.n
    if n == 0:
        raise ValueError("cannot draw a latent path for zero observations")
    h_plus = _ar1_path(alpha.mu, alpha.phi, alpha.sig2, rng.standard_normal(n))
    y_plus = h_plus + np.sqrt(pseudo.variances) * rng.standard_normal(n)
    m_obs = smooth_mean(pseudo, alpha)
    m_plus = smooth_mean(PseudoObservations(y_plus, pseudo.variances), alpha)
    draw = m_obs + (h_plus - m_plus)
    if not np.all(np.isfinite(draw)):
        raise NumericalError("simulation smoother produced non-finite values")
    return draw


_ORACLE_MAX_N = 50


def _prior_cov(alpha: ARParams, n: int) -> np.ndarray:
    idx = np.arange(n)
    return alpha.stationary_var * alpha.phi ** np.abs(idx[:, None] - idx[None, :])


def smoother_moments_oracle(pseudo: PseudoObservations,
                            alpha: ARParams) -> tuple[np.ndarray, np.ndarray]:
    """Dense posterior mean and covariance of h | obs, for small n only.

    Direct joint-normal conditioning on the full covariance matrix; O(n^3)
    and deliberately independent of the Kalman code path.  Refuses n > 50.
    """
    n = pseudo.n
    if n == 0:
        raise ValueError("need at least one observation")
    if n > _ORACLE_MAX_N:
        raise ValueError("dense oracle is restricted to n <= %d, got n = %d" % (_ORACLE_MAX_N, n))
    sigma = _prior_cov(alpha, n)
    s_obs = sigma + np.diag(pseudo.variances)
    resid = pseudo.values - alpha.mu
    mean = alpha.mu + sigma @ np.linalg.solve(s_obs, resid)
    cov = sigma - sigma @ np.linalg.solve(s_obs, sigma)
    cov = 0.5 * (cov + cov.T)
    return mean, cov


def marginal_loglik_oracle(pseudo: PseudoObservations, alpha: ARParams) -> float:
    """Dense log marginal density of obs; cross-checks kalman_loglik for n <= 50."""
    n = pseudo.n
    if n == 0:
        return 0.0
    if n > _ORACLE_MAX_N:
        raise ValueError("dense oracle is restricted to n <= %d, got n = %d" % (_ORACLE_MAX_N, n))
    cov = _prior_cov(alpha, n) + np.diag(pseudo.variances)
    return float(multivariate_normal(mean=np.full(n, alpha.mu), cov=cov).logpdf(pseudo.values))
