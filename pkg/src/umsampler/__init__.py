"""Bayesian inference for latent log-scale duration and volatility models.

The package implements a blocked MCMC sampler whose latent-path move rides
on an adaptively re-weighted normal-mixture approximation of exp-exp
likelihood kernels, plus a single-site slice-sampler baseline and the
diagnostics to compare them.
"""

from .mixture import (AdaptedMixture, KernelParams, MixtureBase,
                      NonIntegrableKernelError, adapt, approximation_error,
                      base_constants, kernel_log_density, kernel_log_normalizer,
                      kernel_normalizer, mixture_log_density)
from .models import (Dataset, DomainError, Family, ModelSpec, exp_exp_params,
                     load_dataset, log_obs_density, log_obs_density_via_kernel,
                     save_dataset, simulate_durations)
from .ssm import (ARParams, NumericalError, PseudoObservations, StationarityError,
                  kalman_loglik, simulate_ar1, simulation_smoother,
                  smoother_moments_oracle)
from .sampler import (ChainState, DrawStore, MCMCConfig, Priors, propose_alpha,
                      run_chain, sample_indicators, sample_shape, ums_transition)
from .baseline import run_ss_chain, slice_update_path
from .diagnostics import (DegenerateChainError, GirConfig, GirReport, SummaryRow,
                          format_summary_table, getting_it_right,
                          inefficiency_factor, posterior_summary)
from .config import ConfigError, ExperimentConfig, default_config

__version__ = "0.1.0"
