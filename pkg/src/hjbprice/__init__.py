"""Utility indifference pricing of European options under proportional
transaction costs via a penalised HJB finite-difference solver."""

from .errors import (ConfigError, ContractViolation, HJBPriceError, NumericalError,
                     ParameterError, UtilityDomainError)
from .grid import GridSpec, Mesh3D, SMesh, build_mesh
from .model import Family, ModelParams, PayoffKind, UtilityFunction, bs_closed_form, shift_A
from .discretization import BoundaryData, Closure, NumericalParams
from .solver import SolveReport, ValueField, solve
from .kernels import BACKEND

__all__ = [
    "BACKEND", "BoundaryData", "Closure", "ConfigError", "ContractViolation", "Family",
    "GridSpec", "HJBPriceError", "Mesh3D", "ModelParams", "NumericalError",
    "NumericalParams", "ParameterError", "PayoffKind", "SMesh", "SolveReport",
    "UtilityDomainError", "UtilityFunction", "ValueField", "bs_closed_form", "build_mesh",
    "shift_A", "solve",
]
__version__ = "0.1.0"
