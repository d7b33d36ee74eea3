"""Structured singular value bounds, including repeated complex full blocks."""

from importlib import resources

from .kernels import BACKEND
from .lower import (
    LowerBoundResult,
    fallback_lower_bound,
    init_vectors,
    power_iteration_repeated_full,
    power_iteration_standard,
)
from .structure import BlockStructure, FullBlock, Perturbation, RepeatedFullBlock, RepeatedScalar
from .sweep import (
    StateSpace,
    SweepRecord,
    SweepTable,
    best_bounds,
    bounds_at,
    freq_response,
    make_grid,
    sweep_bounds,
)
from .upper import (
    InfeasibleError,
    MocConfig,
    UpperBoundResult,
    damped_newton_quartic,
    gen_osborne,
    method_of_centers,
    offdiag_coeffs,
    osborne_balance,
)

__version__ = "0.1.0"


def data_path(name):
    """Path of a shipped data file, e.g. data_path("academic_example.json")."""
    return resources.files(__name__).joinpath("data", name)
