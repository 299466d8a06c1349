class CStarError(Exception):
    """Base class for every error raised by the library."""


class DescriptorMismatch(CStarError):
    """Two elements from different algebras were combined."""


class BadElement(CStarError):
    """Element data has the wrong shape or non-finite entries."""


class NotHermitian(CStarError):
    """Element is too far from self-adjoint to have a real spectrum."""


class NotPositive(CStarError):
    """Element is not in the positive cone."""


class SamplerFailure(CStarError):
    """A domain sampler could not produce member points."""


class DomainExit(CStarError):
    """A self-map produced a point outside its domain."""

    def __init__(self, map_name: str, point, image):
        self.map_name = map_name
        self.point = point
        self.image = image
        super().__init__(f"map '{map_name}' sent {point!r} to {image!r}, outside its domain")


class PreconditionFailed(CStarError):
    """A solver precondition such as d(x0, Tx0) <= I does not hold."""


class BadInverse(CStarError):
    """The supplied right inverse of R failed validation."""


class UnknownEntry(CStarError):
    """No catalog entry with the requested name."""


class BadParameters(CStarError):
    """Parameters outside their documented ranges."""


class ConfigError(CStarError):
    """Run configuration could not be loaded or validated."""
