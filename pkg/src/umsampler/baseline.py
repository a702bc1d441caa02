"""Single-site slice sampler for the latent path, the efficiency baseline.

Each sweep updates h_1 ... h_n in ascending order by slice sampling from
the full conditional p(h_t | h_{-t}, y, alpha, shape), using stepping-out
with shrinkage.  alpha stays fixed for the whole run; the optional shape
update reuses the same random-walk step as the main sampler so the two
chains differ only in how the latent path moves.
"""

from __future__ import annotations

import math
import time

import numpy as np
from numba import njit

from .models import Dataset, ModelSpec, _log_obs_scalar
from .sampler import ChainState, DrawStore, MCMCConfig, Priors, _resolve_monitor, \
    initial_state, sample_shape
from .ssm import ARParams

__all__ = ["slice_update_path", "run_ss_chain"]

_WIDTH = 1.0
_MAX_STEPOUT = 50
_MAX_SHRINK = 100


@njit(cache=True)
def _site_logpost(t, x, h, y, fam, shape, mu, phi, sig2):
    """Log full conditional of h_t = x (up to a constant in x)."""
    n = h.shape[0]
    lp = _log_obs_scalar(y[t], x, fam, shape)
    if t == 0:
        lp += -0.5 * (x - mu) ** 2 * (1.0 - phi * phi) / sig2
    else:
        d = x - mu - phi * (h[t - 1] - mu)
        lp += -0.5 * d * d / sig2
    if t < n - 1:
        d = h[t + 1] - mu - phi * (x - mu)
        lp += -0.5 * d * d / sig2
    return lp


@njit(cache=True)
def _slice_sweep(h, y, fam, shape, mu, phi, sig2, width, max_step, seed):
    """One ascending sweep of stepping-out slice updates, in place.

    Returns the number of sites where bracketing or shrinkage gave out and
    the current value was kept.  Uses numba's internal generator, seeded
    per sweep so the whole chain stays reproducible.
    """
    np.random.seed(seed)
    n = h.shape[0]
    failures = 0
    for t in range(n):
        x0 = h[t]
        lp0 = _site_logpost(t, x0, h, y, fam, shape, mu, phi, sig2)
        z = lp0 - np.random.exponential()
        # place the initial bracket uniformly around x0
        left = x0 - width * np.random.random()
        right = left + width
        j = int(max_step * np.random.random())
        k = max_step - 1 - j
        while j > 0 and _site_logpost(t, left, h, y, fam, shape, mu, phi, sig2) > z:
            left -= width
            j -= 1
        while k > 0 and _site_logpost(t, right, h, y, fam, shape, mu, phi, sig2) > z:
            right += width
            k -= 1
        # shrink toward x0 until a point lands inside the slice
        ok = False
        for _ in range(_MAX_SHRINK):
            x1 = left + (right - left) * np.random.random()
            if _site_logpost(t, x1, h, y, fam, shape, mu, phi, sig2) > z:
                h[t] = x1
                ok = True
                break
            if x1 < x0:
                left = x1
            else:
                right = x1
        if not ok:
            failures += 1
    return failures


def slice_update_path(h: np.ndarray, data: Dataset, spec: ModelSpec, alpha: ARParams,
                      rng: np.random.Generator, *, width: float = _WIDTH,
                      max_step: int = _MAX_STEPOUT) -> tuple[np.ndarray, int]:
    """One full sweep over all sites; returns (new path, bracket failures)."""
    out = h.copy()
    seed = int(rng.integers(0, 2**31 - 1))
    fails = _slice_sweep(out, data.y, spec.family_code,
                         float(spec.shape) if spec.shape is not None else 1.0,
                         alpha.mu, alpha.phi, alpha.sig2, width, max_step, seed)
    return out, int(fails)


def run_ss_chain(data: Dataset, spec: ModelSpec, priors: Priors, config: MCMCConfig,
                 seed_or_rng, *, fix_alpha: ARParams, sample_shape_flag: bool = True,
                 monitor=(100, 500, 1000), store_h_full: bool = False,
                 init: ChainState | None = None) -> DrawStore:
    """Slice-sampler analogue of run_chain with alpha held fixed throughout."""
    data.require_support(spec)
    rng = seed_or_rng if isinstance(seed_or_rng, np.random.Generator) \
        else np.random.default_rng(seed_or_rng)
    state = init if init is not None else initial_state(data, spec, priors)
    state.alpha = fix_alpha
    if not sample_shape_flag and spec.has_shape:
        state.shape = spec.shape
    n = data.n
    mon = _resolve_monitor(monitor, n)
    mon_idx = np.array([t - 1 for t in mon], dtype=np.int64)

    n_total = config.n_burnin + config.n_draws
    n_keep = (config.n_draws + config.thin - 1) // config.thin
    iters = np.empty(n_keep, dtype=np.int64)
    mu = np.empty(n_keep)
    phi = np.empty(n_keep)
    sigma = np.empty(n_keep)
    shp = np.full(n_keep, np.nan)
    h_mon = np.empty((n_keep, len(mon)))
    h_full = np.empty((n_keep, n)) if store_h_full else None
    counts = {"shape_accept": 0, "shape_attempt": 0, "slice_failures": 0,
              "sweeps": 0}

    kept = 0
    t0 = time.perf_counter()
    for it in range(n_total):
        if spec.has_shape and sample_shape_flag:
            state.shape, acc = sample_shape(
                data.y, state.h, spec, priors, state.shape, config.rw_step, rng)
            counts["shape_attempt"] += 1
            counts["shape_accept"] += int(acc)
        live_spec = spec.with_shape(state.shape) if spec.has_shape else spec
        state.h, fails = slice_update_path(state.h, data, live_spec, state.alpha, rng)
        counts["slice_failures"] += fails
        counts["sweeps"] += 1
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
        "alpha": math.nan,
        "h": math.nan,
    }
    return DrawStore(
        family=spec.family.value, monitor=mon, iters=iters[:kept], mu=mu[:kept],
        phi=phi[:kept], sigma=sigma[:kept], shape=shp[:kept],
        h_monitored=h_mon[:kept], h_full=h_full[:kept] if store_h_full else None,
        counts=counts, rates=rates, seconds_total=seconds, n_iterations=n_total,
    )
