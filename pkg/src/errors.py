"""Exception hierarchy shared by every module"""
from typing import Optional


class TwoCopyError(Exception):
    """Base class for all toolkit errors"""


class ArgumentError(TwoCopyError, ValueError):
    """Invalid argument: wrong dimension, empty mask, bad rank, ..."""


class ResourceLimitError(TwoCopyError):
    """Qubit count above the dense-operation cap"""


class InvalidStateError(TwoCopyError):
    """Matrix is not a valid density matrix"""


class NonPhysicalCoefficientsError(InvalidStateError):
    """Pauli coefficients reconstruct to a matrix with negative eigenvalues"""


class InvalidBlochError(InvalidStateError):
    """Bloch vector outside the unit ball"""


class InvalidPOVMError(TwoCopyError):
    """POVM element not positive, or elements not summing to the identity"""

    def __init__(self, message: str, index: Optional[int] = None, eigenvalue: Optional[float] = None):
        super().__init__(message)
        self.index = index
        self.eigenvalue = eigenvalue


class UnrecoverableCoefficientError(TwoCopyError):
    """Ancilla coefficient vanishes at the requested label"""


class PreconditionError(TwoCopyError):
    """Input violates an operation precondition (e.g. mixed state where pure is required)"""


class UsageError(TwoCopyError):
    """Malformed command line or experiment configuration"""
