"""Public interface for the ``thinfilm`` package.

Pseudo-spectral solver and verification harness for the electrified thin-film
equation on a periodic box. This module only re-exports the stable import
surface; the experiments live in their own modules and :func:`run` ties them
to a validated :class:`RunConfig`.
"""

from .api import RunOutcome, run
from .asymptotics import SweepConfig, fit_rate, make_perturbed_data, make_sweep_config, sweep
from .config import RunConfig, parse_config
from .evolve import (
    BlowUpError,
    EnergyLog,
    PicardDivergenceError,
    StepperConfig,
    energy_check,
    etd_step,
    evolve,
    nonlinear_term,
    picard_solve,
    smoothing_profile,
)
from .illposed import IllposedConfig, bilinear_B, d2_exact, inflation_norm, inflation_slope
from .kernel import (
    VERTICAL_FILM,
    HighFreqBound,
    PhysicalParams,
    apply_semigroup,
    check_kernel_sup_bound,
    high_freq_bound,
    kernel_difference_sup,
    kernel_hat,
    symbol_f,
)
from .reports import ExperimentReport
from .spectral import (
    FourierField,
    SpectralGrid,
    Trajectory,
    et_norm,
    make_grid,
    sobolev_norm,
    to_fourier,
    to_physical,
)

__all__ = [
    # Grid and fields
    "FourierField",
    "SpectralGrid",
    "Trajectory",
    "et_norm",
    "make_grid",
    "sobolev_norm",
    "to_fourier",
    "to_physical",
    # Symbol and kernel
    "HighFreqBound",
    "PhysicalParams",
    "VERTICAL_FILM",
    "apply_semigroup",
    "check_kernel_sup_bound",
    "high_freq_bound",
    "kernel_difference_sup",
    "kernel_hat",
    "symbol_f",
    # Evolution
    "BlowUpError",
    "EnergyLog",
    "PicardDivergenceError",
    "StepperConfig",
    "energy_check",
    "etd_step",
    "evolve",
    "nonlinear_term",
    "picard_solve",
    "smoothing_profile",
    # Experiments
    "ExperimentReport",
    "IllposedConfig",
    "SweepConfig",
    "bilinear_B",
    "d2_exact",
    "fit_rate",
    "inflation_norm",
    "inflation_slope",
    "make_perturbed_data",
    "make_sweep_config",
    "sweep",
    # Orchestration
    "RunConfig",
    "RunOutcome",
    "parse_config",
    "run",
]
