"""
Exception hierarchy shared by every module.

Each error carries a ``code`` equal to its class name; the CLI prints
``error: <code> <message>`` and exits with status 1.
"""


class SvacError(Exception):
    """Base class for all toolkit errors"""

    @property
    def code(self) -> str:
        return type(self).__name__

    def __str__(self) -> str:
        return self.args[0] if self.args else self.code


class MissingPath(SvacError, FileNotFoundError):
    """Input path does not exist"""


class MalformedHeader(SvacError):
    """Bad magic, unsupported maxval or unparsable header"""


class DimensionMismatch(SvacError):
    """Frames disagree on height/width"""


class TruncatedData(SvacError):
    """Payload shorter than the header promises"""


class IoFailure(SvacError, OSError):
    """Writing to disk failed"""


class EmptyInput(SvacError):
    """A sequence with no frames where frames are required"""


class InvalidArgument(SvacError, ValueError):
    """Precondition violation"""


class InvalidClipLength(InvalidArgument):
    """Clip length below 2"""


class LayoutMismatch(SvacError):
    """Grid layout does not fit the clip being composed"""


class IndexOutOfRange(SvacError, IndexError):
    """Tile, clip or frame index outside its valid range"""


class NonDivisibleDimensions(SvacError):
    """Patch size does not divide the frame"""


class WindowLargerThanGrid(SvacError):
    """Pooling window does not fit in the token grid"""


class ScoreCountMismatch(SvacError):
    """Score vector length differs from token count"""


class SchemaViolation(SvacError):
    """Manifest is structurally or semantically invalid"""


class VersionMismatch(SvacError):
    """Manifest format version is not supported"""


class NoComposite(SvacError):
    """Clip has a single member and therefore no composite"""


class ConfigError(SvacError):
    """Invalid run configuration"""
