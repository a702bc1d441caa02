"""Observation families tied to a latent log-scale process.

Each family specifies p(y_t | h_t) with E[y_t | h_t] = exp(h_t) for the
duration families, plus the Gaussian stochastic-volatility case where h_t
is the log variance of a return.  Every log-likelihood, seen as a function
of h_t, is an exp-exp kernel plus an h-free constant; ``exp_exp_params``
produces that kernel and the mapping is what lets a single sampler serve
all families.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, replace
from enum import Enum
from pathlib import Path

import numpy as np
from numba import njit
from scipy.special import gammaln

from .mixture import KernelParams

__all__ = [
    "Family",
    "ModelSpec",
    "Dataset",
    "DomainError",
    "log_obs_density",
    "log_obs_constant",
    "log_obs_density_via_kernel",
    "exp_exp_params",
    "kernel_params_batch",
    "simulate_durations",
    "load_dataset",
    "save_dataset",
]

_LOG_2PI = math.log(2.0 * math.pi)


class DomainError(ValueError):
    """Observation outside the family's support (durations must be > 0)."""


class Family(str, Enum):
    EXPONENTIAL = "exponential"
    WEIBULL = "weibull"
    GAMMA = "gamma"
    SV = "sv"


_SHAPELESS = (Family.EXPONENTIAL, Family.SV)

# integer codes for the jit-compiled single-site evaluator
_FAMILY_CODE = {Family.EXPONENTIAL: 0, Family.WEIBULL: 1, Family.GAMMA: 2, Family.SV: 3}


@dataclass(frozen=True)
class ModelSpec:
    """An observation family plus its shape parameter (where one exists).

    Shape bounds track the uniform prior support: 0 < shape <= 10.
    """

    family: Family
    shape: float | None = None

    def __post_init__(self):
        fam = Family(self.family)
        object.__setattr__(self, "family", fam)
        if fam in _SHAPELESS:
            if self.shape is not None:
                raise ValueError("%s model takes no shape parameter" % fam.value)
        else:
            if self.shape is None:
                raise ValueError("%s model requires a shape parameter" % fam.value)
            if not (0.0 < self.shape <= 10.0) or not math.isfinite(self.shape):
                raise ValueError("shape must lie in (0, 10], got %r" % (self.shape,))

    @property
    def has_shape(self) -> bool:
        return self.family not in _SHAPELESS

    def with_shape(self, shape: float) -> "ModelSpec":
        return replace(self, shape=shape)

    @property
    def family_code(self) -> int:
        return _FAMILY_CODE[self.family]


@dataclass(frozen=True)
class Dataset:
    """Observed series; strictly positive for the duration families."""

    y: np.ndarray

    def __post_init__(self):
        y = np.asarray(self.y, dtype=float)
        if y.ndim != 1 or y.shape[0] < 2:
            raise ValueError("y must be a 1-d array with n >= 2")
        if not np.all(np.isfinite(y)):
            raise ValueError("y must be finite")
        object.__setattr__(self, "y", y)

    @property
    def n(self) -> int:
        return self.y.shape[0]

    def require_support(self, spec: ModelSpec) -> "Dataset":
        if spec.family is not Family.SV and not np.all(self.y > 0.0):
            raise DomainError("durations must be strictly positive for %s" % spec.family.value)
        if spec.family is Family.SV and np.any(self.y == 0.0):
            raise DomainError("zero return has no exp-exp kernel (b would vanish)")
        return self


def _check_support(y: np.ndarray, spec: ModelSpec):
    if spec.family is Family.SV:
        if np.any(y == 0.0):
            raise DomainError("zero return has no exp-exp kernel (b would vanish)")
    elif not np.all(y > 0.0):
        raise DomainError("durations must be strictly positive for %s" % spec.family.value)


def log_obs_density(y, h, spec: ModelSpec):
    """log p(y | h) for the given family; broadcasts over arrays."""
    y = np.asarray(y, dtype=float)
    h = np.asarray(h, dtype=float)
    _check_support(y, spec)
    if spec.family is Family.EXPONENTIAL:
        out = -h - y * np.exp(-h)
    elif spec.family is Family.WEIBULL:
        g = spec.shape
        lg = gammaln(1.0 + 1.0 / g)
        out = (math.log(g) + g * lg + (g - 1.0) * np.log(y)
               - g * h - np.exp(g * (np.log(y) + lg - h)))
    elif spec.family is Family.GAMMA:
        z = spec.shape
        out = (z * math.log(z) + (z - 1.0) * np.log(y) - float(gammaln(z))
               - z * h - y * z * np.exp(-h))
    else:  # SV
        out = -0.5 * _LOG_2PI - 0.5 * h - 0.5 * y * y * np.exp(-h)
    if out.ndim == 0:
        return float(out)
    return out


def log_obs_constant(y, spec: ModelSpec):
    """The h-free part of log p(y | h): log p minus the exp-exp kernel."""
    y = np.asarray(y, dtype=float)
    _check_support(y, spec)
    if spec.family is Family.EXPONENTIAL:
        out = np.zeros_like(y)
    elif spec.family is Family.WEIBULL:
        g = spec.shape
        out = math.log(g) + g * float(gammaln(1.0 + 1.0 / g)) + (g - 1.0) * np.log(y)
    elif spec.family is Family.GAMMA:
        z = spec.shape
        out = z * math.log(z) + (z - 1.0) * np.log(y) - float(gammaln(z))
    else:
        out = np.full_like(y, -0.5 * _LOG_2PI)
    if out.ndim == 0:
        return float(out)
    return out


def exp_exp_params(y: float, spec: ModelSpec) -> KernelParams:
    """Kernel (a, b, c) with x = h for one observation.

    b is assembled on the log scale: the Weibull b = 2 y^g Gamma(1+1/g)^g
    overflows double precision for small g while its log stays tame.
    """
    y = float(y)
    _check_support(np.asarray(y), spec)
    if spec.family is Family.EXPONENTIAL:
        return KernelParams.from_log_b(2.0, math.log(2.0) + math.log(y), -1.0)
    if spec.family is Family.WEIBULL:
        g = spec.shape
        log_b = math.log(2.0) + g * (math.log(y) + float(gammaln(1.0 + 1.0 / g)))
        return KernelParams.from_log_b(2.0, log_b, -g)
    if spec.family is Family.GAMMA:
        z = spec.shape
        return KernelParams.from_log_b(2.0 * z, math.log(2.0 * z) + math.log(y), -1.0)
    return KernelParams.from_log_b(1.0, 2.0 * math.log(abs(y)), -1.0)


def kernel_params_batch(y: np.ndarray, spec: ModelSpec) -> tuple[float, np.ndarray, float]:
    """(a, log_b array, c) for a whole dataset; a and c are shared per family."""
    y = np.asarray(y, dtype=float)
    _check_support(y, spec)
    if spec.family is Family.EXPONENTIAL:
        return 2.0, math.log(2.0) + np.log(y), -1.0
    if spec.family is Family.WEIBULL:
        g = spec.shape
        return 2.0, math.log(2.0) + g * (np.log(y) + float(gammaln(1.0 + 1.0 / g))), -g
    if spec.family is Family.GAMMA:
        z = spec.shape
        return 2.0 * z, math.log(2.0 * z) + np.log(y), -1.0
    return 1.0, 2.0 * np.log(np.abs(y)), -1.0


def log_obs_density_via_kernel(y: float, h, spec: ModelSpec):
    """Kernel route to the same density for one observation, vectorized in h.

    Equals log_obs_density(y, h, spec) up to rounding; the difference is an
    h-free constant by construction, which the sampler relies on.
    """
    from .mixture import kernel_log_density

    return kernel_log_density(h, exp_exp_params(y, spec)) + log_obs_constant(float(y), spec)


@njit(cache=True)
def _log_obs_scalar(y, h, fam, shape):
    """Single-point log p(y|h); fam codes 0=exp, 1=weibull, 2=gamma, 3=sv, -1=flat."""
    if fam == 0:
        return -h - y * math.exp(-h)
    if fam == 1:
        lg = math.lgamma(1.0 + 1.0 / shape)
        return (math.log(shape) + shape * lg + (shape - 1.0) * math.log(y)
                - shape * h - math.exp(shape * (math.log(y) + lg - h)))
    if fam == 2:
        return (shape * math.log(shape) + (shape - 1.0) * math.log(y)
                - math.lgamma(shape) - shape * h - y * shape * math.exp(-h))
    if fam == 3:
        return -0.5 * _LOG_2PI - 0.5 * h - 0.5 * y * y * math.exp(-h)
    return 0.0  # flat likelihood, used by the slice-sampler tests


def simulate_durations(spec: ModelSpec, alpha, n: int, rng: np.random.Generator):
    """Simulate (Dataset, latent path) with E[y_t | h_t] = exp(h_t).

    Weibull draws use scale exp(h)/Gamma(1+1/g); Gamma uses shape z and
    scale exp(h)/z.  The SV family returns real-valued returns instead of
    durations.
    """
    from .ssm import simulate_ar1

    if n < 2:
        raise ValueError("n must be >= 2")
    h = simulate_ar1(alpha, n, rng)
    scale = np.exp(h)
    if spec.family is Family.EXPONENTIAL:
        y = rng.exponential(scale)
    elif spec.family is Family.WEIBULL:
        g = spec.shape
        y = (scale / math.exp(float(gammaln(1.0 + 1.0 / g)))) * rng.weibull(g, size=n)
    elif spec.family is Family.GAMMA:
        z = spec.shape
        y = rng.gamma(z, scale / z)
    else:
        y = np.exp(0.5 * h) * rng.standard_normal(n)
    return Dataset(y=y).require_support(spec), h


def save_dataset(path, ds: Dataset, h_true: np.ndarray | None = None):
    """Write the series as CSV with header y (plus h_true when known)."""
    path = Path(path)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        if h_true is None:
            w.writerow(["y"])
            for v in ds.y:
                w.writerow([repr(float(v))])
        else:
            if len(h_true) != ds.n:
                raise ValueError("h_true length must match y")
            w.writerow(["y", "h_true"])
            for v, hv in zip(ds.y, h_true):
                w.writerow([repr(float(v)), repr(float(hv))])


def load_dataset(path) -> tuple[Dataset, np.ndarray | None]:
    """Read a dataset CSV; returns (Dataset, h_true or None)."""
    path = Path(path)
    with path.open(newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise ValueError("%s: empty dataset file" % path)
    header = [c.strip() for c in rows[0]]
    if "y" not in header:
        raise ValueError("%s: dataset header must contain a y column" % path)
    iy = header.index("y")
    ih = header.index("h_true") if "h_true" in header else None
    ys, hs = [], []
    for r in rows[1:]:
        if not r or all(not c.strip() for c in r):
            continue
        ys.append(float(r[iy]))
        if ih is not None:
            hs.append(float(r[ih]))
    ds = Dataset(y=np.array(ys))
    return ds, (np.array(hs) if ih is not None else None)
