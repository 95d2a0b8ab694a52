"""Exception hierarchy shared by all rieszreg modules."""


class RieszError(Exception):
    """Base class for all errors raised by this package."""


class InsufficientJetOrder(RieszError):
    """The Taylor jet is too short to regularize the requested exponent."""


class IllConditionedFit(RieszError):
    """A least-squares basis fit exceeded the condition-number bound.

    Usually signals that the epsilon sampling range must be widened.
    """


class NonSimplePole(RieszError):
    """Pole removal diverged: the pole is not simple or the residue is wrong."""


class DegenerateParameterization(RieszError):
    """The parameterization speed or metric vanished at a requested point."""


class UnknownShape(RieszError):
    """Shape name not in the builtin catalog."""


class InvalidParams(RieszError):
    """Builtin shape parameters are missing, extraneous, or out of range."""


class QuadratureNotConverged(RieszError):
    """Grid doubling changed the result beyond the requested tolerance."""


class FitUnstable(RieszError):
    """A jet fit did not reach the requested coefficient accuracy."""


class ExponentNotConvergent(RieszError):
    """The requested exponent lies outside the convergent regime."""


class MethodsDisagree(RieszError):
    """Two independent evaluation routes differ beyond their combined tolerance."""


class ExcludedExponent(RieszError):
    """The formula is undefined at this exponent; use the pole-removal path."""


class ExponentOutOfRange(RieszError):
    """Exponent outside the validity strip of this quantity."""


class UnsupportedDimension(RieszError):
    """Requested dimension is not covered by this operation."""


class PoleAt(RieszError):
    """Closed-form evaluation requested exactly at a pole."""

    def __init__(self, z, message=None):
        self.z = z
        super().__init__(message or f"requested exponent z={z} is a pole")


class CenterTooClose(RieszError):
    """Inversion center violates the distance margin to the shape."""
