"""DG domain-decomposition solver and finite-volume reference solver."""

from .dg import DDOperator, DGState, dg_rhs, project_initial, run_dd, run_single, single_domain_rhs
from .fv import FVState, advance_upwind, run_reference
from .grid import Grid
from .norms import dg_l2_squared, dg_sampler, fv_sampler, function_sampler, l2_error, weighted_l2
from .rk import ssp_rk3_step

__all__ = [
    "DDOperator",
    "DGState",
    "FVState",
    "Grid",
    "advance_upwind",
    "dg_l2_squared",
    "dg_rhs",
    "dg_sampler",
    "fv_sampler",
    "function_sampler",
    "l2_error",
    "project_initial",
    "run_dd",
    "run_reference",
    "run_single",
    "single_domain_rhs",
    "ssp_rk3_step",
    "weighted_l2",
]
