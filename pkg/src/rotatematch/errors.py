"""Exception hierarchy shared by all pipeline stages."""


class RotateMatchError(Exception):
    """Base class for all pipeline errors."""


class ZeroAreaImage(RotateMatchError):
    """Image has zero width or height."""


class BadMagic(RotateMatchError):
    """Binary file does not start with the expected magic bytes."""


class VersionUnsupported(RotateMatchError):
    """Binary file declares a format version this reader does not handle."""


class TruncatedFile(RotateMatchError):
    """Binary file ends before the declared payload is complete."""


class DimensionMismatch(RotateMatchError):
    """Descriptor dimensions disagree within one file or between inputs."""


class NonFiniteValue(RotateMatchError):
    """A descriptor contains NaN or infinity."""


class OutOfBounds(RotateMatchError):
    """A point lies outside the frame it is expressed in."""


class CoordOutOfBounds(RotateMatchError):
    """A stored keypoint coordinate lies outside its image."""


class MissingFeatures(RotateMatchError):
    """A candidate pair references an image with no feature set."""


class UnknownId(RotateMatchError):
    """A match result references an image id absent from the id universe."""


class PairNotFound(RotateMatchError):
    """Requested pair does not appear in the matches file."""


class EmptyInput(RotateMatchError):
    """An aggregate operation received no datasets."""
