"""Exception types shared across the package.

Every error raised deliberately by the library derives from DipGPError, so
callers (and the command line driver) can separate usage mistakes from
genuine numerical failures.
"""


class DipGPError(Exception):
    """Base class for all library errors."""


class InvalidAxis(DipGPError):
    """Symbol axis is not a unit vector."""


class SingularOrigin(DipGPError):
    """A degree-zero multiplier was requested at k = 0, where it is undefined."""


class NonCancelingSymbol(DipGPError):
    """Angular weight has a nonzero spherical mean, so the multiplier diverges."""


class EmptyShell(DipGPError):
    """Truncated kernel requested with inner radius >= outer radius."""


class GridMismatch(DipGPError):
    """Operands built on different grids were combined."""


class ZeroField(DipGPError):
    """Normalization of an (almost) identically zero field was requested."""


class NotNormalized(DipGPError):
    """A unit-mass field was required but the mass is off beyond tolerance."""


class GaugeNotSupported(DipGPError):
    """Diagnostic only defined without a vector potential was called with one."""


class RefusedUnstable(DipGPError):
    """Ground-state solve refused: the interaction admits no finite infimum."""


class RefusedStable(DipGPError):
    """Collapse probe refused: the interaction is stable, nothing to exhibit."""


class ResolutionExceeded(DipGPError):
    """Requested trial state cannot be resolved on the given grid.

    Carries ``largest_valid`` (largest usable scale parameter, possibly None).
    """

    def __init__(self, message, largest_valid=None):
        super().__init__(message)
        self.largest_valid = largest_valid


class NumericalBreakdown(DipGPError):
    """Line search or iteration failed beyond recovery."""


class NoLimit(DipGPError):
    """Extrapolation to zero momentum did not settle to a limit."""


class NoRealSpaceForm(DipGPError):
    """Operation needs pointwise values but the potential only has a transform."""


class AtLeastThreePoints(DipGPError):
    """A rate fit was requested with fewer than three data points."""


class InternalConsistencyError(DipGPError):
    """A quantity violated an identity it should satisfy by construction."""
