"""
Exception hierarchy for the photon gun simulator.
"""


class PhotonGunError(Exception):
    """Base class for all simulator errors."""


class InvalidParameterError(PhotonGunError, ValueError):
    """Input outside the domain an operation accepts."""


class PreconditionError(InvalidParameterError):
    """Valid input that violates an operation-specific precondition."""


class NumericalError(PhotonGunError, RuntimeError):
    """A computation failed to converge or produced no usable result."""
