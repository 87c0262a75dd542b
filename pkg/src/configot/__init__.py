"""Optimal transport between finite point processes on configuration space."""

from .core import (
    INFINITE,
    Configuration,
    CountDistribution,
    DiscreteMeasure,
    ExtendedCost,
    half_sq_dist,
    validate_configuration,
)
from .distance import (
    barbour_distance,
    combine_by_count,
    cox_distance,
    empirical_process_distance,
    finiteness_gate,
    poisson_coupling_estimate,
    poisson_distance,
    shift_bound_check,
    tensorization_check,
)
from .matching import Matching, brute_force_cost, check_cyclical_monotonicity, config_cost, symmetric_cost
from .ot import MonotoneMap1D, TransportPlan, lift_map, lift_potential, solve_1d_quadratic, solve_discrete_ot
from .processes import (
    BinomialModel,
    CoxModel,
    Intensity,
    PiecewiseDensity,
    PoissonModel,
    UniformDensity,
    count_pmf,
    sample_binomial,
    sample_cox,
    sample_poisson,
)

__all__ = [name for name in dir() if not name.startswith("_")]
__version__ = "0.1.0"
