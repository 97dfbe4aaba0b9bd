"""Exact PBW and obstruction-class computations for Lie algebroid pairs."""

from .errors import (
    AlgebroidError,
    ContractError,
    InternalConsistencyError,
    ResourceError,
    StructuralError,
    ValidationReport,
)
from .ring import FiniteAlgebra, PolynomialRing, Derivation, rational_field, dual_numbers
from .algebroid import Algebroid, AdaptedPair
from .envelope import Envelope, straighten
from .modcat import FlatModule, unit_module, quotient_module, tensor_module, hom_module

__version__ = "0.1.0"

__all__ = [
    "AlgebroidError", "ContractError", "InternalConsistencyError", "ResourceError",
    "StructuralError", "ValidationReport", "FiniteAlgebra", "PolynomialRing", "Derivation",
    "rational_field", "dual_numbers", "Algebroid", "AdaptedPair", "Envelope", "straighten",
    "FlatModule", "unit_module", "quotient_module", "tensor_module", "hom_module",
]
