"""The unified mixture sampler.

One sweep of the chain, given durations y and latent log scales h:

  1. random-walk Metropolis on log(shape), when the family has a shape;
  2. component indicators s_t drawn independently from their discrete
     conditionals under the adapted mixture;
  3. a joint (alpha, h) move: a Laplace-style independence proposal for
     alpha built on the mixture pseudo-likelihood, an exact simulation-
     smoother draw of h given the proposed alpha, and a single
     Metropolis-Hastings correction whose ratio involves only the true
     observation density and the mixture marginal.  Rejection restores
     both alpha and h.

The mixture pseudo-model treats obs_t = mean of the adapted component
s_t with its variance, so every Gaussian computation reduces to the
linear state-space engine in ``ssm``.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass

import numpy as np
from numba import njit
from scipy.linalg import solve_triangular
from scipy.special import betaln, gammaln, logsumexp

from .mixture import AdaptedBatch, adapt_batch
from .models import Dataset, Family, ModelSpec, kernel_params_batch, log_obs_density
from .ssm import ARParams, NumericalError, PseudoObservations, simulation_smoother

__all__ = [
    "Priors",
    "MCMCConfig",
    "ChainState",
    "DrawStore",
    "ChainError",
    "run_chain",
    "ums_transition",
    "initial_state",
    "sample_shape",
    "sample_indicators",
    "propose_alpha",
    "joint_log_ratio",
    "to_unconstrained",
    "from_unconstrained",
]

_LOG_2PI = math.log(2.0 * math.pi)


class ChainError(RuntimeError):
    """A sampler block failed; message carries iteration index and block name."""


@dataclass(frozen=True)
class Priors:
    """Hyperparameters: mu ~ N(mean, var), (phi+1)/2 ~ Beta(a, b),
    sig2 ~ InvGamma(a, b), shape ~ Uniform(lo, hi)."""

    mu_mean: float = 0.0
    mu_var: float = 25.0
    phi_a: float = 1.0
    phi_b: float = 1.0
    sig2_a: float = 5e-4
    sig2_b: float = 5e-4
    shape_lo: float = 0.0
    shape_hi: float = 10.0

    def __post_init__(self):
        if self.mu_var <= 0 or self.phi_a <= 0 or self.phi_b <= 0:
            raise ValueError("prior scale/shape hyperparameters must be positive")
        if self.sig2_a <= 0 or self.sig2_b <= 0:
            raise ValueError("inverse-gamma hyperparameters must be positive")
        if not (0.0 <= self.shape_lo < self.shape_hi):
            raise ValueError("shape prior needs 0 <= lo < hi")

    def log_prior_alpha(self, alpha: ARParams) -> float:
        lp = -0.5 * (_LOG_2PI + math.log(self.mu_var)) \
            - 0.5 * (alpha.mu - self.mu_mean) ** 2 / self.mu_var
        u = 0.5 * (alpha.phi + 1.0)
        lp += ((self.phi_a - 1.0) * math.log(u) + (self.phi_b - 1.0) * math.log1p(-u)
               - float(betaln(self.phi_a, self.phi_b)) - math.log(2.0))
        lp += (self.sig2_a * math.log(self.sig2_b) - float(gammaln(self.sig2_a))
               - (self.sig2_a + 1.0) * math.log(alpha.sig2) - self.sig2_b / alpha.sig2)
        return lp

    def log_prior_shape(self, shape: float) -> float:
        if self.shape_lo < shape < self.shape_hi:
            return -math.log(self.shape_hi - self.shape_lo)
        return -math.inf

    def sample_alpha(self, rng: np.random.Generator) -> ARParams:
        mu = self.mu_mean + math.sqrt(self.mu_var) * rng.standard_normal()
        phi = 2.0 * rng.beta(self.phi_a, self.phi_b) - 1.0
        sig2 = self.sig2_b / rng.gamma(self.sig2_a)
        return ARParams(mu=mu, phi=phi, sig2=sig2)

    def sample_shape(self, rng: np.random.Generator) -> float:
        return float(rng.uniform(self.shape_lo, self.shape_hi))


@dataclass(frozen=True)
class MCMCConfig:
    """Chain lengths and tuning constants."""

    n_burnin: int = 10_000
    n_draws: int = 50_000
    thin: int = 1
    rw_step: float = 0.1

    def __post_init__(self):
        if self.n_burnin < 0 or self.n_draws < 0:
            raise ValueError("iteration counts must be >= 0")
        if self.thin < 1:
            raise ValueError("thin must be >= 1")
        if not (self.rw_step > 0.0):
            raise ValueError("rw_step must be > 0")


# --- parameter transforms -------------------------------------------------

def to_unconstrained(alpha: ARParams) -> np.ndarray:
    """(mu, phi, sig2) -> (mu, log((1+phi)/(1-phi)), log sig2)."""
    return np.array([
        alpha.mu,
        math.log1p(alpha.phi) - math.log1p(-alpha.phi),
        math.log(alpha.sig2),
    ])


def from_unconstrained(theta: np.ndarray) -> ARParams:
    return ARParams(
        mu=float(theta[0]),
        phi=math.tanh(0.5 * float(theta[1])),
        sig2=math.exp(float(theta[2])),
    )


def _prior_consts(priors: Priors) -> np.ndarray:
    """Prior hyperparameters plus precomputed special-function values, packed
    for the jit-compiled objective."""
    return np.array([
        priors.mu_mean, priors.mu_var, priors.phi_a, priors.phi_b,
        float(betaln(priors.phi_a, priors.phi_b)),
        priors.sig2_a, priors.sig2_b, float(gammaln(priors.sig2_a)),
    ])


@njit(cache=True)
def _theta_logpost_nb(th, obs, var, pc):
    """log pi*(theta | s, y): pseudo likelihood + prior + transform Jacobians.

    theta = (mu, log((1+phi)/(1-phi)), log sig2); -inf marks any point the
    transforms or the filter cannot represent, which the optimizer treats
    as an ordinary rejection.
    """
    mu = th[0]
    phi = math.tanh(0.5 * th[1])
    one_m_phi2 = 1.0 - phi * phi
    if not (one_m_phi2 > 0.0):
        return -np.inf
    sig2 = math.exp(th[2])
    if not (sig2 > 0.0) or not np.isfinite(sig2):
        return -np.inf
    ll = 0.0
    a = mu
    p = sig2 / one_m_phi2
    for t in range(obs.shape[0]):
        f = p + var[t]
        if not (f > 0.0) or not np.isfinite(f):
            return -np.inf
        v = obs[t] - a
        ll += -0.5 * (_LOG_2PI + np.log(f) + v * v / f)
        k = p / f
        af = a + k * v
        pf = p * (1.0 - k)
        a = mu + phi * (af - mu)
        p = phi * phi * pf + sig2
    # priors on (mu, phi, sig2)
    lp = -0.5 * (_LOG_2PI + np.log(pc[1])) - 0.5 * (mu - pc[0]) ** 2 / pc[1]
    u = 0.5 * (phi + 1.0)
    lp += (pc[2] - 1.0) * np.log(u) + (pc[3] - 1.0) * np.log(1.0 - u) \
        - pc[4] - math.log(2.0)
    lp += pc[5] * np.log(pc[6]) - pc[7] - (pc[5] + 1.0) * th[2] - pc[6] / sig2
    # Jacobians of the two monotone maps
    lp += np.log(0.5 * one_m_phi2) + th[2]
    return ll + lp


_FD_STEP = 1e-5
_MAX_ITER = 50
_GRAD_TOL = 1e-6


@njit(cache=True)
def _fd_grad_nb(th, obs, var, pc):
    g = np.empty(3)
    x = th.copy()
    for i in range(3):
        hi = _FD_STEP * max(1.0, abs(th[i]))
        x[i] = th[i] + hi
        fp = _theta_logpost_nb(x, obs, var, pc)
        x[i] = th[i] - hi
        fm = _theta_logpost_nb(x, obs, var, pc)
        x[i] = th[i]
        g[i] = (fp - fm) / (2.0 * hi)
    return g


@njit(cache=True)
def _fd_hess_nb(th, obs, var, pc):
    h = np.empty(3)
    for i in range(3):
        h[i] = _FD_STEP * max(1.0, abs(th[i]))
    hess = np.empty((3, 3))
    f0 = _theta_logpost_nb(th, obs, var, pc)
    x = th.copy()
    for i in range(3):
        x[i] = th[i] + h[i]
        fp = _theta_logpost_nb(x, obs, var, pc)
        x[i] = th[i] - h[i]
        fm = _theta_logpost_nb(x, obs, var, pc)
        x[i] = th[i]
        hess[i, i] = (fp - 2.0 * f0 + fm) / (h[i] * h[i])
    for i in range(3):
        for j in range(i + 1, 3):
            x[i] = th[i] + h[i]; x[j] = th[j] + h[j]
            fpp = _theta_logpost_nb(x, obs, var, pc)
            x[j] = th[j] - h[j]
            fpm = _theta_logpost_nb(x, obs, var, pc)
            x[i] = th[i] - h[i]; x[j] = th[j] + h[j]
            fmp = _theta_logpost_nb(x, obs, var, pc)
            x[j] = th[j] - h[j]
            fmm = _theta_logpost_nb(x, obs, var, pc)
            x[i] = th[i]; x[j] = th[j]
            hess[i, j] = (fpp - fpm - fmp + fmm) / (4.0 * h[i] * h[j])
            hess[j, i] = hess[i, j]
    return hess


@njit(cache=True)
def _newton_mode_nb(theta0, obs, var, pc):
    """Damped Newton ascent with central-difference derivatives.

    Returns (mode, ok).  ok=0 flags failure to reach the gradient tolerance
    within the iteration budget or a non-finite objective.
    """
    th = theta0.copy()
    f = _theta_logpost_nb(th, obs, var, pc)
    if not np.isfinite(f):
        return th, 0
    ok = 0
    for _ in range(_MAX_ITER):
        g = _fd_grad_nb(th, obs, var, pc)
        if np.max(np.abs(g)) < _GRAD_TOL:
            ok = 1
            break
        hess = _fd_hess_nb(th, obs, var, pc)
        neg_h = -0.5 * (hess + hess.T)
        for i in range(3):
            neg_h[i, i] += 1e-10
        step = np.linalg.solve(neg_h, g)
        if not np.all(np.isfinite(step)) or step @ g <= 0.0:
            step = g  # fall back to steepest ascent
        lam = 1.0
        improved = False
        for _ in range(30):
            f_try = _theta_logpost_nb(th + lam * step, obs, var, pc)
            if np.isfinite(f_try) and f_try > f:
                th = th + lam * step
                f = f_try
                improved = True
                break
            lam *= 0.5
        if not improved:
            # flat to rounding: accept the point if the gradient is tame
            ok = 1 if np.max(np.abs(g)) < 1e-3 else 0
            break
    return th, ok


def _log_post_theta(theta: np.ndarray, pseudo: PseudoObservations, priors: Priors) -> float:
    """Python-facing wrapper over the jit objective (same function exactly)."""
    return float(_theta_logpost_nb(np.asarray(theta, dtype=float),
                                   pseudo.values, pseudo.variances,
                                   _prior_consts(priors)))


@dataclass(frozen=True)
class LaplaceFit:
    mode: np.ndarray
    cov: np.ndarray
    chol: np.ndarray
    converged: bool


def laplace_fit(pseudo: PseudoObservations, priors: Priors,
                theta0: np.ndarray) -> LaplaceFit:
    """Mode and curvature of log pi*(theta | s, y) from a warm start.

    Newton with central finite differences; the negated Hessian at the mode
    is ridge-regularized until it admits a Cholesky factor.
    """
    pc = _prior_consts(priors)
    obs, var = pseudo.values, pseudo.variances
    try:
        mode, ok = _newton_mode_nb(np.asarray(theta0, dtype=float), obs, var, pc)
    except np.linalg.LinAlgError:
        return LaplaceFit(mode=np.asarray(theta0, float), cov=np.eye(3),
                          chol=np.eye(3), converged=False)
    if not ok or not np.all(np.isfinite(mode)):
        return LaplaceFit(mode=mode, cov=np.eye(3), chol=np.eye(3), converged=False)
    neg_h = -_fd_hess_nb(mode, obs, var, pc)
    neg_h = 0.5 * (neg_h + neg_h.T)
    ridge = 0.0
    for _ in range(14):
        try:
            np.linalg.cholesky(neg_h + ridge * np.eye(3))
            break
        except np.linalg.LinAlgError:
            ridge = 1e-8 if ridge == 0.0 else ridge * 10.0
    else:
        return LaplaceFit(mode=mode, cov=np.eye(3), chol=np.eye(3), converged=False)
    cov = np.linalg.inv(neg_h + ridge * np.eye(3))
    cov = 0.5 * (cov + cov.T)
    try:
        cov_chol = np.linalg.cholesky(cov)
    except np.linalg.LinAlgError:
        return LaplaceFit(mode=mode, cov=cov, chol=np.eye(3), converged=False)
    return LaplaceFit(mode=mode, cov=cov, chol=cov_chol, converged=True)


def _mvn_logpdf(x: np.ndarray, mean: np.ndarray, chol: np.ndarray) -> float:
    u = solve_triangular(chol, x - mean, lower=True)
    return float(-0.5 * u @ u - np.log(np.diag(chol)).sum() - 0.5 * x.size * _LOG_2PI)


@dataclass(frozen=True)
class AlphaProposal:
    """Outcome of one independence-MH move on alpha."""

    alpha: ARParams
    accepted: bool
    log_accept: float
    fit: LaplaceFit


def propose_alpha(pseudo: PseudoObservations, priors: Priors, alpha_cur: ARParams,
                  rng: np.random.Generator, *, power: float = 1.0) -> AlphaProposal:
    """Laplace independence proposal for alpha with an inner MH accept.

    Optimizer failure falls back to the current alpha and counts as a
    rejection.
    """
    theta_cur = to_unconstrained(alpha_cur)
    fit = laplace_fit(pseudo, priors, theta_cur)
    if not fit.converged:
        return AlphaProposal(alpha=alpha_cur, accepted=False, log_accept=-math.inf, fit=fit)
    theta_prop = fit.mode + fit.chol @ rng.standard_normal(fit.mode.size)
    log_acc = (_log_post_theta(theta_prop, pseudo, priors)
               - _log_post_theta(theta_cur, pseudo, priors)
               + _mvn_logpdf(theta_cur, fit.mode, fit.chol)
               - _mvn_logpdf(theta_prop, fit.mode, fit.chol))
    log_acc = min(0.0, log_acc) * power
    if math.log(rng.random()) < log_acc:
        return AlphaProposal(alpha=from_unconstrained(theta_prop), accepted=True,
                             log_accept=log_acc, fit=fit)
    return AlphaProposal(alpha=alpha_cur, accepted=False, log_accept=log_acc, fit=fit)


# --- shape step -----------------------------------------------------------

def _shape_log_accept(y: np.ndarray, h: np.ndarray, spec: ModelSpec, priors: Priors,
                      cur: float, prop: float) -> float:
    """Log MH ratio for log-scale random walk on the shape, with Jacobian."""
    lp_prop = priors.log_prior_shape(prop)
    if lp_prop == -math.inf:
        return -math.inf
    ll_cur = float(np.sum(log_obs_density(y, h, spec.with_shape(cur))))
    ll_prop = float(np.sum(log_obs_density(y, h, spec.with_shape(prop))))
    lp_cur = priors.log_prior_shape(cur)
    return (ll_prop + lp_prop + math.log(prop)) - (ll_cur + lp_cur + math.log(cur))


def sample_shape(y: np.ndarray, h: np.ndarray, spec: ModelSpec, priors: Priors,
                 cur: float, rw_step: float, rng: np.random.Generator,
                 *, power: float = 1.0) -> tuple[float, bool]:
    """One random-walk MH update of the shape parameter on the log scale."""
    prop = cur * math.exp(rw_step * rng.standard_normal())
    log_acc = min(0.0, _shape_log_accept(y, h, spec, priors, cur, prop)) * power
    if math.log(rng.random()) < log_acc:
        return prop, True
    return cur, False


# --- indicators -----------------------------------------------------------

def _component_log_lik(h: np.ndarray, mix: AdaptedBatch) -> np.ndarray:
    """(n, K) array of log w_i + log N(mean_ti; h_t, v_i^2)."""
    z = (mix.means - h[:, None]) / mix.v[None, :]
    return mix.log_w[None, :] - mix.log_v[None, :] - 0.5 * _LOG_2PI - 0.5 * z * z


def sample_indicators(h: np.ndarray, mix: AdaptedBatch,
                      rng: np.random.Generator) -> np.ndarray:
    """Draw one mixture component per observation from its conditional."""
    logw = _component_log_lik(h, mix)
    logw -= logw.max(axis=1, keepdims=True)
    p = np.exp(logw)
    cum = np.cumsum(p, axis=1)
    u = rng.random(h.shape[0]) * cum[:, -1]
    return (cum < u[:, None]).sum(axis=1).astype(np.int64)


def mixture_marginal_loglik(h: np.ndarray, mix: AdaptedBatch) -> float:
    """sum_t log sum_i w_i N(mean_ti; h_t, v_i^2), the joint-move denominator."""
    return float(np.sum(logsumexp(_component_log_lik(h, mix), axis=1)))


def joint_log_ratio(y: np.ndarray, h_cur: np.ndarray, h_prop: np.ndarray,
                    spec: ModelSpec, mix: AdaptedBatch) -> float:
    """Log MH ratio for the joint (alpha, h) move.

    True observation density at the proposal over the current path, times
    the mixture marginal at the current path over the proposal.  Weights,
    means and scales all live in the adapted batch, so alpha cancels.
    """
    ll_prop = float(np.sum(log_obs_density(y, h_prop, spec)))
    ll_cur = float(np.sum(log_obs_density(y, h_cur, spec)))
    return (ll_prop - ll_cur) + (mixture_marginal_loglik(h_cur, mix)
                                 - mixture_marginal_loglik(h_prop, mix))


# --- chain state and storage ---------------------------------------------

@dataclass
class ChainState:
    h: np.ndarray
    alpha: ARParams
    shape: float | None
    s: np.ndarray | None = None


def initial_state(data: Dataset, spec: ModelSpec, priors: Priors) -> ChainState:
    """Deterministic warm start: prior-typical alpha, log(y) latent path."""
    if spec.has_shape:
        shape = 1.0
        if not (priors.shape_lo < shape < priors.shape_hi):
            shape = 0.5 * (priors.shape_lo + priors.shape_hi)
    else:
        shape = None
    if spec.family is Family.SV:
        h0 = np.log(data.y ** 2 + 1e-8)
    else:
        h0 = np.log(data.y + 1e-8)
    return ChainState(h=h0, alpha=ARParams(mu=0.0, phi=0.9, sig2=0.04), shape=shape)


@dataclass
class DrawStore:
    """Retained draws plus acceptance bookkeeping.

    ``shape`` is NaN-filled for families without a shape parameter.  The
    ``h`` columns track the 1-based monitor indices; ``h_full`` is only
    populated on request (it is n_kept x n).
    """

    family: str
    monitor: tuple[int, ...]
    iters: np.ndarray
    mu: np.ndarray
    phi: np.ndarray
    sigma: np.ndarray
    shape: np.ndarray
    h_monitored: np.ndarray
    h_full: np.ndarray | None
    counts: dict[str, int]
    rates: dict[str, float]
    seconds_total: float
    n_iterations: int

    @property
    def n_kept(self) -> int:
        return self.mu.shape[0]

    @property
    def seconds_per_iteration(self) -> float:
        if self.n_iterations == 0:
            return 0.0
        return self.seconds_total / self.n_iterations

    def param_columns(self) -> dict[str, np.ndarray]:
        cols = {"mu": self.mu, "phi": self.phi, "sigma": self.sigma}
        if not np.all(np.isnan(self.shape)):
            cols["shape"] = self.shape
        for j, t in enumerate(self.monitor):
            cols["h_%d" % t] = self.h_monitored[:, j]
        return cols

    def to_csv(self, path):
        import csv as _csv
        from pathlib import Path as _Path

        with _Path(path).open("w", newline="") as fh:
            w = _csv.writer(fh)
            head = ["iter", "mu", "phi", "sigma", "shape"] + \
                ["h_%d" % t for t in self.monitor]
            w.writerow(head)
            for i in range(self.n_kept):
                row = [int(self.iters[i]), repr(float(self.mu[i])), repr(float(self.phi[i])),
                       repr(float(self.sigma[i])), repr(float(self.shape[i]))]
                row += [repr(float(v)) for v in self.h_monitored[i]]
                w.writerow(row)


def _resolve_monitor(monitor, n) -> tuple[int, ...]:
    got = tuple(int(t) for t in monitor if 1 <= int(t) <= n)
    return got


# --- one full transition --------------------------------------------------

@dataclass
class TransitionInfo:
    shape_attempted: bool = False
    shape_accepted: bool = False
    alpha_attempted: bool = False
    alpha_accepted: bool = False
    joint_accepted: bool = False


class _MixCache:
    """Adapted-batch cache keyed on the shape value (b depends on shape)."""

    def __init__(self, y: np.ndarray, spec: ModelSpec):
        self.y = y
        self.spec = spec
        self.key = None
        self.mix = None

    def get(self, shape: float | None) -> AdaptedBatch:
        if self.mix is None or self.key != shape:
            spec = self.spec if shape is None else self.spec.with_shape(shape)
            a, log_b, c = kernel_params_batch(self.y, spec)
            self.mix = adapt_batch(a, log_b, c)
            self.key = shape
        return self.mix


def ums_transition(state: ChainState, data: Dataset, spec: ModelSpec, priors: Priors,
                   config: MCMCConfig, rng: np.random.Generator, *,
                   fix_alpha: ARParams | None = None, sample_shape_flag: bool = True,
                   mh_power: float = 1.0, cache: _MixCache | None = None) -> TransitionInfo:
    """One full sweep, mutating ``state`` in place.

    ``mh_power`` scales every log acceptance ratio and exists solely so the
    joint-distribution validation can demonstrate that a corrupted kernel
    (ratio squared) is caught; leave it at 1.0 for real inference.
    """
    info = TransitionInfo()
    y = data.y
    if cache is None:
        cache = _MixCache(y, spec)

    if spec.has_shape and sample_shape_flag:
        info.shape_attempted = True
        state.shape, info.shape_accepted = sample_shape(
            y, state.h, spec, priors, state.shape, config.rw_step, rng, power=mh_power)

    live_spec = spec.with_shape(state.shape) if spec.has_shape else spec
    mix = cache.get(state.shape)

    state.s = sample_indicators(state.h, mix, rng)
    pseudo = PseudoObservations(
        values=mix.means[np.arange(y.shape[0]), state.s],
        variances=mix.v2[state.s],
    )

    if fix_alpha is None:
        info.alpha_attempted = True
        prop = propose_alpha(pseudo, priors, state.alpha, rng, power=mh_power)
        info.alpha_accepted = prop.accepted
        alpha_prop = prop.alpha
    else:
        alpha_prop = fix_alpha

    h_prop = simulation_smoother(pseudo, alpha_prop, rng)
    log_ratio = min(0.0, joint_log_ratio(y, state.h, h_prop, live_spec, mix)) * mh_power
    if math.log(rng.random()) < log_ratio:
        state.alpha = alpha_prop
        state.h = h_prop
        info.joint_accepted = True
    # rejection leaves alpha and h exactly as they were, including an
    # inner-accepted alpha proposal
    return info


def run_chain(data: Dataset, spec: ModelSpec, priors: Priors, config: MCMCConfig,
              seed_or_rng, *, fix_alpha: ARParams | None = None,
              sample_shape_flag: bool = True, monitor=(100, 500, 1000),
              store_h_full: bool = False, mh_power: float = 1.0,
              init: ChainState | None = None) -> DrawStore:
    """Run burn-in plus sampling and return the retained draws.

    ``seed_or_rng`` is either an integer seed or a ready Generator; with a
    fixed seed the store is bit-for-bit reproducible.
    """
    data.require_support(spec)
    rng = seed_or_rng if isinstance(seed_or_rng, np.random.Generator) \
        else np.random.default_rng(seed_or_rng)
    state = init if init is not None else initial_state(data, spec, priors)
    if fix_alpha is not None:
        state.alpha = fix_alpha
    if not sample_shape_flag and spec.has_shape:
        state.shape = spec.shape
    n = data.n
    mon = _resolve_monitor(monitor, n)
    mon_idx = np.array([t - 1 for t in mon], dtype=np.int64)
    cache = _MixCache(data.y, spec)

    # initialization sweeps: the raw log(y) start sits at every site's
    # likelihood peak, which a smooth proposal cannot beat when alpha is
    # held at a tight value; a few indicator/smoother draws without the
    # joint correction move h onto a plausible path before the exact
    # kernel takes over.  Pure warm-up, so invariance is untouched.
    if init is None:
        try:
            for _ in range(5):
                mix0 = cache.get(state.shape)
                s0 = sample_indicators(state.h, mix0, rng)
                pseudo0 = PseudoObservations(values=mix0.means[np.arange(n), s0],
                                             variances=mix0.v2[s0])
                state.h = simulation_smoother(pseudo0, state.alpha, rng)
        except (NumericalError, FloatingPointError, np.linalg.LinAlgError) as exc:
            raise ChainError("initialization sweep failed: %s" % exc) from exc

    n_total = config.n_burnin + config.n_draws
    n_keep = (config.n_draws + config.thin - 1) // config.thin
    iters = np.empty(n_keep, dtype=np.int64)
    mu = np.empty(n_keep)
    phi = np.empty(n_keep)
    sigma = np.empty(n_keep)
    shp = np.full(n_keep, np.nan)
    h_mon = np.empty((n_keep, len(mon)))
    h_full = np.empty((n_keep, n)) if store_h_full else None
    counts = {"shape_accept": 0, "shape_attempt": 0, "alpha_accept": 0,
              "alpha_attempt": 0, "joint_accept": 0, "joint_attempt": 0}

    kept = 0
    t0 = time.perf_counter()
    for it in range(n_total):
        try:
            info = ums_transition(state, data, spec, priors, config, rng,
                                  fix_alpha=fix_alpha, sample_shape_flag=sample_shape_flag,
                                  mh_power=mh_power, cache=cache)
        except (NumericalError, FloatingPointError, np.linalg.LinAlgError) as exc:
            raise ChainError("iteration %d, sampler block failed: %s" % (it, exc)) from exc
        counts["joint_attempt"] += 1
        counts["joint_accept"] += int(info.joint_accepted)
        if info.shape_attempted:
            counts["shape_attempt"] += 1
            counts["shape_accept"] += int(info.shape_accepted)
        if info.alpha_attempted:
            counts["alpha_attempt"] += 1
            counts["alpha_accept"] += int(info.alpha_accepted)
        if it >= config.n_burnin and (it - config.n_burnin) % config.thin == 0:
            iters[kept] = it + 1
            mu[kept] = state.alpha.mu
            phi[kept] = state.alpha.phi
            sigma[kept] = math.sqrt(state.alpha.sig2)
            if state.shape is not None:
                shp[kept] = state.shape
            h_mon[kept] = state.h[mon_idx]
            if store_h_full:
                h_full[kept] = state.h
            kept += 1
    seconds = time.perf_counter() - t0

    rates = {
        "shape": counts["shape_accept"] / counts["shape_attempt"]
        if counts["shape_attempt"] else math.nan,
        "alpha": counts["alpha_accept"] / counts["alpha_attempt"]
        if counts["alpha_attempt"] else math.nan,
        "h": counts["joint_accept"] / counts["joint_attempt"]
        if counts["joint_attempt"] else math.nan,
    }
    return DrawStore(
        family=spec.family.value, monitor=mon, iters=iters[:kept], mu=mu[:kept],
        phi=phi[:kept], sigma=sigma[:kept], shape=shp[:kept],
        h_monitored=h_mon[:kept], h_full=h_full[:kept] if store_h_full else None,
        counts=counts, rates=rates, seconds_total=seconds, n_iterations=n_total,
    )
