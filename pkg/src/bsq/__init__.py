"""Pseudo-spectral truncated Boussinesq solver with norm, commutator and blow-up diagnostics."""

from bsq._backend import BACKEND
from bsq.analysis import (
    Ensemble,
    blowup_monitor,
    blowup_time_predictor,
    energy_balance_check,
    grad_theta_bound_check,
    inequality_probe,
    truncation_convergence_study,
)
from bsq.config import RunConfig, parse_config
from bsq.dynamics import ForcingSpec, State, StepperConfig, SystemSpec, make_initial, rhs, run, step
from bsq.errors import (
    BlowupSignal,
    BsqError,
    ConfigurationError,
    DimensionError,
    NotApplicableError,
    ParameterError,
    ReportError,
)
from bsq.norms import bmo_norm, commutator, lebesgue_norm, sobolev_norm
from bsq.spectral import (
    GridSpec,
    SpectralField,
    VectorField,
    apply_multiplier,
    forward,
    leray_project,
    transform,
    truncate,
)

__version__ = "0.1.0"

__all__ = [
    "BACKEND", "BlowupSignal", "BsqError", "ConfigurationError", "DimensionError", "Ensemble",
    "ForcingSpec", "GridSpec", "NotApplicableError", "ParameterError", "ReportError", "RunConfig",
    "SpectralField", "State", "StepperConfig", "SystemSpec", "VectorField", "apply_multiplier",
    "blowup_monitor", "blowup_time_predictor", "bmo_norm", "commutator", "energy_balance_check",
    "forward", "grad_theta_bound_check", "inequality_probe", "lebesgue_norm", "leray_project",
    "make_initial", "parse_config", "rhs", "run", "sobolev_norm", "step", "transform",
    "truncate", "truncation_convergence_study",
]
