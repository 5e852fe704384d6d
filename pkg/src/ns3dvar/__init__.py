"""Continuous-time 3DVAR filtering for 2D incompressible Navier-Stokes.

Spectral solver on the periodic torus, nudging-type filter driven by noisy
observations of the low modes, computable accuracy/stability bounds, the
discrete-time filter whose high-frequency-observation limit the continuous
filter is, and preset experiments exercising all of it.
"""

from .analysis import accuracy_bound, bound_report, gamma_max, trace_power
from .assimilation import FilterParams, NoiseStream, RunRecord, run_filter
from .discrete import (
    DiscreteFilterConfig,
    continuum_limit_study,
    generate_observations,
    run_discrete_3dvar,
)
from .dynamics import DivergedStepError, NseParams, integrate_signal, spin_up
from .experiments import (
    ExperimentConfig,
    PRESET_NAMES,
    preset,
    run_experiment,
    validate,
)
from .spectral import SpectralField, bilinear, leray_project, sobolev_norm

__version__ = "0.1.0"

__all__ = [
    "ExperimentConfig",
    "DiscreteFilterConfig",
    "DivergedStepError",
    "FilterParams",
    "NoiseStream",
    "NseParams",
    "PRESET_NAMES",
    "RunRecord",
    "SpectralField",
    "accuracy_bound",
    "bilinear",
    "bound_report",
    "continuum_limit_study",
    "gamma_max",
    "generate_observations",
    "integrate_signal",
    "leray_project",
    "preset",
    "run_discrete_3dvar",
    "run_experiment",
    "run_filter",
    "sobolev_norm",
    "spin_up",
    "trace_power",
    "validate",
]
