"""Exception hierarchy shared across the package.

Every library-raised error derives from :class:`StitchError` so callers can
catch one base class; the CLI maps subclasses onto documented exit codes.
"""


class StitchError(Exception):
    """Base class for all errors raised by this package."""


class ProjectiveDivideByZero(StitchError):
    """A point maps to the line at infinity (homogeneous w ~ 0)."""


class SingularMatrix(StitchError):
    """A transform matrix is singular or numerically non-invertible."""


class NonInvertibleResult(SingularMatrix):
    """A composed transform came out singular."""


class ExtentMismatch(StitchError):
    """Two rasters that must share an extent do not."""


class DegenerateExtent(StitchError):
    """A raster is too small along the axis an operation needs."""


class RegistrationError(StitchError):
    """Base class for pairwise registration failures."""

    def __init__(self, message, pair=None):
        super().__init__(message)
        self.pair = pair


class EmptyOverlap(RegistrationError):
    """No warped source centroid lands inside the destination bounds."""


class NoValidMatches(RegistrationError):
    """Every initial correspondence exceeds the gate radius."""


class DegenerateConfiguration(StitchError):
    """Point configuration is rank-deficient for the requested model."""


class OrderingError(StitchError):
    """Base class for sequence-ordering failures."""


class DisconnectedSet(OrderingError):
    """The image set does not form a single chain of registrable pairs."""


class TooManyImages(OrderingError):
    """Exhaustive ordering was requested for more images than supported."""


class AmbiguousOrientation(OrderingError):
    """Chain orientation cannot be inferred from the pairwise transforms."""


class FeatureMapMismatch(StitchError):
    """A precomputed feature map's extent disagrees with its image."""


class TooSmall(StitchError):
    """Input raster is smaller than the metric's window."""


class InfeasibleSpec(StitchError):
    """A synthetic-data request cannot tile the panorama as asked."""


class ConfigError(StitchError):
    """Malformed or unknown key in a pipeline configuration file."""
