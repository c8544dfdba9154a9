"""Exception taxonomy shared by every module.

The CLI maps these onto exit codes: usage problems exit 1, data/validation
problems exit 2, numeric aborts exit 3.
"""


class SsynError(Exception):
    """Base class for all package errors."""


class DimensionError(SsynError):
    """Tensor shapes disagree; the message names the offending axes."""


class ConfigurationError(SsynError):
    """A layer or network cannot be built/applied with the given sizes."""


class ContractError(SsynError):
    """A caller violated an operation's precondition."""


class NumericError(SsynError):
    """A non-finite value appeared where finite math was required."""


class MediaParseError(SsynError):
    """A media file could not be decoded; includes byte offset context."""


class UnsupportedFormatError(MediaParseError):
    """The container parsed but holds a codec/layout we do not support."""


class AlignmentError(SsynError):
    """Video and audio durations or lengths disagree beyond tolerance."""


class ValidationError(SsynError):
    """A config or invariant check failed."""


class CheckpointError(SsynError):
    """Base for checkpoint load/save failures."""


class CheckpointVersionError(CheckpointError):
    """Magic or format version does not match."""


class CheckpointTruncatedError(CheckpointError):
    """The file ended before the declared payload was read."""


class CheckpointChecksumError(CheckpointError):
    """Payload CRC does not match the trailer."""


class CheckpointStageError(CheckpointError):
    """The checkpoint's stage tag does not provide the weights required."""
