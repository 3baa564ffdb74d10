"""Simulation of the semi-discrete directed polymer with Brownian environment.

Point-to-point and stationary (Burke boundary) partition functions are
computed by a log-domain dynamic program on a uniform time grid; quenched path
measures are sampled backwards from the same tables.  On top of that sit
exact-law checks of the simulator and fluctuation-exponent sweeps in the
intermediate disorder regime.
"""

__version__ = "0.1.0"

from .config import DEFAULT, Tolerances
from .environment import Environment, GridSpec, auto_delta, generate, zero_environment
from .errors import BudgetError, ConvergenceError, DomainError, TruncationError
from .experiments import (ExperimentConfig, ExperimentReport, KpzScaling, PathFluctuation, PowerLawRegressor,
                          PtpFluctuation, VarianceScaling, fit_power_law, run_kpz_scaling, run_path_fluctuation,
                          run_ptp_fluctuation, run_variance_scaling)
from .identities import IdentityVerdict, run_suite
from .partition import (BoundaryWeights, DPTable, PhiSpec, burke_increments, kpz_logZ, ptp_forward,
                        sample_boundary, scaling_map, stationary_forward)
from .pathsampler import quenched_marginals, quenched_sigma0_tail, sample_ptp_path, sample_stationary_path
from .specialfn import (centering, characteristic_params, free_energy_density, model_constants, psi0, psi1,
                        psi1_inv, psi2)

__all__ = [
    "DEFAULT", "Tolerances", "Environment", "GridSpec", "auto_delta", "generate", "zero_environment",
    "BudgetError", "ConvergenceError", "DomainError", "TruncationError",
    "ExperimentConfig", "ExperimentReport", "KpzScaling", "PathFluctuation", "PowerLawRegressor",
    "PtpFluctuation", "VarianceScaling", "fit_power_law", "run_kpz_scaling", "run_path_fluctuation",
    "run_ptp_fluctuation", "run_variance_scaling", "IdentityVerdict", "run_suite",
    "BoundaryWeights", "DPTable", "PhiSpec", "burke_increments", "kpz_logZ", "ptp_forward", "sample_boundary",
    "scaling_map", "stationary_forward", "quenched_marginals", "quenched_sigma0_tail", "sample_ptp_path",
    "sample_stationary_path", "centering", "characteristic_params", "free_energy_density", "model_constants",
    "psi0", "psi1", "psi1_inv", "psi2",
]
