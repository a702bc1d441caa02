"""Experiment configuration: a flat INI file with one section per concern.

parse -> serialize -> parse is the identity on every field, which the
tests pin down; floats are written with repr so nothing drifts.
"""

from __future__ import annotations

import configparser
import io
from dataclasses import dataclass, field, replace
from pathlib import Path

from .models import ModelSpec
from .sampler import MCMCConfig, Priors
from .ssm import ARParams

__all__ = ["ConfigError", "ExperimentConfig", "default_config"]


class ConfigError(ValueError):
    """Malformed or inconsistent configuration file."""


@dataclass(frozen=True)
class ExperimentConfig:
    family: str = "weibull"
    shape: float | None = 0.5
    n_obs: int = 1000
    true_mu: float = 0.0
    true_phi: float = 0.97
    true_sigma: float = 0.3
    n_burnin: int = 10_000
    n_draws: int = 50_000
    thin: int = 1
    rw_step: float = 0.1
    seed: int = 1
    sampler: str = "ums"
    fix_alpha: bool = False
    sample_shape: bool = True
    monitor: tuple[int, ...] = (100, 500, 1000)
    priors: Priors = field(default_factory=Priors)

    def __post_init__(self):
        if self.sampler not in ("ums", "ss"):
            raise ConfigError("sampler must be 'ums' or 'ss', got %r" % (self.sampler,))
        if self.n_obs < 2:
            raise ConfigError("n_obs must be >= 2")
        try:
            self.model_spec()
            self.true_alpha()
            MCMCConfig(n_burnin=self.n_burnin, n_draws=self.n_draws,
                       thin=self.thin, rw_step=self.rw_step)
        except (ValueError, TypeError) as exc:
            raise ConfigError(str(exc)) from exc

    def model_spec(self) -> ModelSpec:
        return ModelSpec(self.family, self.shape)

    def true_alpha(self) -> ARParams:
        return ARParams(mu=self.true_mu, phi=self.true_phi, sig2=self.true_sigma ** 2)

    def mcmc(self) -> MCMCConfig:
        return MCMCConfig(n_burnin=self.n_burnin, n_draws=self.n_draws,
                          thin=self.thin, rw_step=self.rw_step)

    def override(self, **kw) -> "ExperimentConfig":
        return replace(self, **kw)

    # -- serialization ----------------------------------------------------

    def to_ini(self) -> str:
        cp = configparser.ConfigParser()
        cp["model"] = {"family": self.family, "n_obs": str(self.n_obs)}
        if self.shape is not None:
            cp["model"]["shape"] = repr(self.shape)
        cp["truth"] = {"mu": repr(self.true_mu), "phi": repr(self.true_phi),
                       "sigma": repr(self.true_sigma)}
        cp["mcmc"] = {"n_burnin": str(self.n_burnin), "n_draws": str(self.n_draws),
                      "thin": str(self.thin), "rw_step": repr(self.rw_step),
                      "seed": str(self.seed)}
        cp["sampler"] = {"kind": self.sampler, "fix_alpha": str(self.fix_alpha).lower(),
                         "sample_shape": str(self.sample_shape).lower(),
                         "monitor": ",".join(str(t) for t in self.monitor)}
        p = self.priors
        cp["priors"] = {
            "mu_mean": repr(p.mu_mean), "mu_var": repr(p.mu_var),
            "phi_a": repr(p.phi_a), "phi_b": repr(p.phi_b),
            "sig2_a": repr(p.sig2_a), "sig2_b": repr(p.sig2_b),
            "shape_lo": repr(p.shape_lo), "shape_hi": repr(p.shape_hi),
        }
        buf = io.StringIO()
        cp.write(buf)
        return buf.getvalue()

    def save(self, path):
        Path(path).write_text(self.to_ini())

    @classmethod
    def from_ini(cls, text: str) -> "ExperimentConfig":
        cp = configparser.ConfigParser()
        try:
            cp.read_string(text)
        except configparser.Error as exc:
            raise ConfigError("cannot parse config: %s" % exc) from exc
        kw = {}
        try:
            if cp.has_section("model"):
                if cp.has_option("model", "family"):
                    kw["family"] = cp.get("model", "family").strip().lower()
                if cp.has_option("model", "shape"):
                    kw["shape"] = cp.getfloat("model", "shape")
                if cp.has_option("model", "n_obs"):
                    kw["n_obs"] = cp.getint("model", "n_obs")
            if cp.has_section("truth"):
                for src, dst in (("mu", "true_mu"), ("phi", "true_phi"),
                                 ("sigma", "true_sigma")):
                    if cp.has_option("truth", src):
                        kw[dst] = cp.getfloat("truth", src)
            if cp.has_section("mcmc"):
                for opt, conv in (("n_burnin", cp.getint), ("n_draws", cp.getint),
                                  ("thin", cp.getint), ("rw_step", cp.getfloat),
                                  ("seed", cp.getint)):
                    if cp.has_option("mcmc", opt):
                        kw[opt] = conv("mcmc", opt)
            if cp.has_section("sampler"):
                if cp.has_option("sampler", "kind"):
                    kw["sampler"] = cp.get("sampler", "kind").strip().lower()
                if cp.has_option("sampler", "fix_alpha"):
                    kw["fix_alpha"] = cp.getboolean("sampler", "fix_alpha")
                if cp.has_option("sampler", "sample_shape"):
                    kw["sample_shape"] = cp.getboolean("sampler", "sample_shape")
                if cp.has_option("sampler", "monitor"):
                    raw = cp.get("sampler", "monitor").strip()
                    kw["monitor"] = tuple(int(t) for t in raw.split(",") if t.strip()) \
                        if raw else ()
            if cp.has_section("priors"):
                pkw = {}
                for opt in ("mu_mean", "mu_var", "phi_a", "phi_b", "sig2_a",
                            "sig2_b", "shape_lo", "shape_hi"):
                    if cp.has_option("priors", opt):
                        pkw[opt] = cp.getfloat("priors", opt)
                kw["priors"] = Priors(**pkw)
        except ValueError as exc:
            raise ConfigError("bad config value: %s" % exc) from exc
        if kw.get("family") in ("exponential", "sv"):
            kw.setdefault("shape", None)
        try:
            return cls(**kw)
        except TypeError as exc:
            raise ConfigError(str(exc)) from exc

    @classmethod
    def load(cls, path) -> "ExperimentConfig":
        p = Path(path)
        if not p.exists():
            raise ConfigError("config file not found: %s" % p)
        return cls.from_ini(p.read_text())


def default_config() -> ExperimentConfig:
    """The reference setup: Weibull durations, gamma = 0.5, n = 1000."""
    return ExperimentConfig()
