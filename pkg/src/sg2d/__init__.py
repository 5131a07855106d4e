"""sg2d: pseudospectral toolkit for the renormalized 2-d stochastic sine-Gordon model.

Builds the frequency-truncated Gibbs measure over the Gaussian free field,
integrates the associated damped-wave and parabolic stochastic flows with
exact per-mode linear stepping, constructs the renormalized phase-exponential
field, and ships the statistical experiments that check the renormalization
identities and measure invariance at finite cutoff.
"""

__version__ = "0.1.0"

from .chaos import (
    ChaosField,
    RenormConstants,
    chaos_smooth_sup_norm,
    truncated_variance,
    wick_exponential,
    wick_factor,
)
from .dynamics import (
    ObservableSet,
    Trajectory,
    dpd_step,
    hyperbolic_step,
    invariance_experiment,
    parabolic_step,
    picard_iterates,
)
from .fourier import CutoffProfile, FourierField, GridSpec, truncated_green
from .gibbs import (
    ChainState,
    DriftControl,
    estimate_log_partition,
    log_weight,
    optimize_drift,
    pcn_step,
    sample_gibbs,
    variational_objective,
)
from .kernels import backend_name
from .sampling import (
    LinearStepTables,
    PhaseState,
    RngStream,
    build_linear_tables,
    estimate_covariance,
    evolve_linear,
    sample_mu,
    sample_phase_pair,
)

__all__ = [
    "ChaosField",
    "ChainState",
    "CutoffProfile",
    "DriftControl",
    "FourierField",
    "GridSpec",
    "LinearStepTables",
    "ObservableSet",
    "PhaseState",
    "RenormConstants",
    "RngStream",
    "Trajectory",
    "backend_name",
    "build_linear_tables",
    "chaos_smooth_sup_norm",
    "dpd_step",
    "estimate_covariance",
    "estimate_log_partition",
    "evolve_linear",
    "hyperbolic_step",
    "invariance_experiment",
    "log_weight",
    "optimize_drift",
    "parabolic_step",
    "pcn_step",
    "picard_iterates",
    "sample_gibbs",
    "sample_mu",
    "sample_phase_pair",
    "truncated_green",
    "truncated_variance",
    "variational_objective",
    "wick_exponential",
    "wick_factor",
]
