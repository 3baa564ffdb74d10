"""Numerical tolerances and budgets shared across the package.

All knobs live in one frozen record so that a run manifest can echo them
verbatim.  Override by building a new record with :func:`dataclasses.replace`.
"""

from dataclasses import dataclass, asdict


@dataclass(frozen=True)
class Tolerances:
    # special functions
    polygamma_shift_to: float = 10.0
    psi1_inv_residual: float = 1e-10
    psi1_inv_maxiter: int = 200
    tiny: float = 1e-300

    # environment / DP
    max_cells: int = 400_000_000  # n * m_count ceiling for stored environments
    delta_cap: float = 0.02
    delta_scale: float = 0.1
    telescoping_atol: float = 1e-9

    # kpz boundary truncation
    kpz_epsilon: float = 1e-6

    # statistics
    ks_pvalue_floor: float = 1e-3
    mean_se_mult: float = 4.0
    var_se_mult: float = 5.0
    bootstrap_resamples: int = 200
    min_span_factor: float = 8.0

    def as_dict(self):
        return asdict(self)


DEFAULT = Tolerances()
