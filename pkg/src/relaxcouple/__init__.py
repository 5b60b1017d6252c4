"""Interface coupling between hyperbolic relaxation systems and their equilibrium limits."""

from .coupling import CouplingMatrices, Derivation, LayerData, derive, solve_coupling
from .errors import InstabilityError, RelaxCoupleError, SingularSystemError, ValidationError
from .models import MomentConvention, carleman, grad_moment, load_system, save_system
from .sysmodel import RelaxationSystem, build_system

__version__ = "0.1.0"

__all__ = [
    "CouplingMatrices",
    "Derivation",
    "InstabilityError",
    "LayerData",
    "MomentConvention",
    "RelaxCoupleError",
    "RelaxationSystem",
    "SingularSystemError",
    "ValidationError",
    "build_system",
    "carleman",
    "derive",
    "grad_moment",
    "load_system",
    "save_system",
    "solve_coupling",
]
