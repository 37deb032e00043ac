"""Exception hierarchy shared by all bandedge modules."""


class BandEdgeError(Exception):
    """Base class for every error raised by the package."""


class DomainError(BandEdgeError, ValueError):
    """An argument lies outside the mathematical domain of an operation."""


class RangeError(BandEdgeError, ValueError):
    """A frequency lies outside (or on the boundary of) a tabulated grid."""


class SingularPointError(BandEdgeError, ValueError):
    """Evaluation at a band edge, where the reservoir transform diverges."""

    def __init__(self, message, edge=None):
        super().__init__(message)
        self.edge = edge


class UnsupportedSpecError(BandEdgeError, TypeError):
    """The reservoir kind does not support the requested operation."""


class ConvergenceError(BandEdgeError, RuntimeError):
    """A trajectory did not settle to a steady state."""

    def __init__(self, message, drift=None):
        super().__init__(message)
        self.drift = drift


class InstabilityError(BandEdgeError, RuntimeError):
    """The time integrator produced a runaway amplitude."""


class RevivalError(BandEdgeError, ValueError):
    """A discrete-bath horizon exceeds the recurrence time of the mode grid."""


class NearTransparencyError(BandEdgeError, ValueError):
    """Susceptibility too close to zero for the algebraic inversion."""


class InsufficientDataError(BandEdgeError, ValueError):
    """Too few usable points for a band-edge fit."""
