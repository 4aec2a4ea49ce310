"""Entanglement bounds of two-qubit states at fixed CHSH violation."""
from .errors import BellBoundsError, DomainError, InvalidState
from .qcore import DensityMatrix

__all__ = ["BellBoundsError", "DensityMatrix", "DomainError", "InvalidState"]
