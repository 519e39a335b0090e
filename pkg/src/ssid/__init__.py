"""Stochastic subspace identification with finite-sample error bounds.

Identifies the innovation-form parameters (A, C, K) of an output-only
linear Gaussian system from one trajectory: a least-squares regression of
stacked future outputs on stacked past outputs estimates the Hankel-like
matrix, and an SVD-based balanced realization extracts the parameters.
Alongside the estimator, the package evaluates the finite-sample error
envelopes, persistence-of-excitation events and realization robustness
bounds that govern it, and ships a seeded Monte Carlo harness that checks
the predicted convergence rates empirically.
"""

__version__ = "0.1.0"

from .bounds import (BoundInputs, BoundReport, delta_n, hankel_error_bound,
                     kappa_n, martingale_bound, realization_error_bounds,
                     sigma_e_matrix, state_covariance, thresholds)
from .errors import SsidError
from .harness import (ExperimentConfig, SweepResult, martingale_experiment,
                      run_trial, sweep, verify_bounds)
from .identify import (HankelEstimate, Realization, balanced_realization,
                       identify, regress_hankel)
from .kernels import BACKEND
from .metrics import (ErrorRecord, error_metrics, pe_events, procrustes_align,
                      reference_realization, truncation_diagnostic)
from .model import (AssumptionReport, StateSpace, SteadyKalman,
                    check_assumptions, solve_dare, spectral_radius)
from .presets import get_preset, preset_names
from .simulate import (SimConfig, Trajectory, simulate_innovation,
                       simulate_statespace)
from .structmats import (DataMatrices, HankelParams, build_data_matrices,
                         controllability_rev, hankel_true, observability,
                         toeplitz)

__all__ = [
    "__version__", "BACKEND", "SsidError",
    "StateSpace", "SteadyKalman", "AssumptionReport", "solve_dare",
    "check_assumptions", "spectral_radius",
    "SimConfig", "Trajectory", "simulate_innovation", "simulate_statespace",
    "HankelParams", "DataMatrices", "observability", "controllability_rev",
    "toeplitz", "hankel_true", "build_data_matrices",
    "HankelEstimate", "Realization", "regress_hankel",
    "balanced_realization", "identify",
    "BoundInputs", "BoundReport", "state_covariance", "sigma_e_matrix",
    "delta_n", "kappa_n", "thresholds", "hankel_error_bound",
    "martingale_bound", "realization_error_bounds",
    "ErrorRecord", "reference_realization", "procrustes_align",
    "error_metrics", "pe_events", "truncation_diagnostic",
    "ExperimentConfig", "SweepResult", "run_trial", "sweep", "verify_bounds",
    "martingale_experiment", "get_preset", "preset_names",
]
