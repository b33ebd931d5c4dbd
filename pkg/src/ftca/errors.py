"""Exception hierarchy shared by all ftca modules."""


class FtcaError(Exception):
    """Base class for every error raised by this package."""


class SchemaError(FtcaError):
    """Column set or column naming does not match the expected schema."""


class MissingLabelError(SchemaError):
    """A requested label column is not present in the dataset."""


class DataParseError(FtcaError):
    """A CSV cell could not be parsed as a number."""


class ShapeError(FtcaError):
    """Matrix or vector dimensions are inconsistent."""


class DomainError(FtcaError):
    """An argument is outside the valid domain (counts, ranges, symmetry)."""


class ConfigError(FtcaError):
    """A configuration value violates its invariants."""


class ConditioningError(FtcaError):
    """A factorization failed or a system is numerically singular."""


class DivergenceError(FtcaError):
    """Training produced a non-finite loss."""

    def __init__(self, epoch: int, loss: float):
        super().__init__(f"non-finite loss {loss!r} at epoch {epoch}")
        self.epoch = epoch
        self.loss = loss


class UndefinedScoreError(FtcaError):
    """A score (R², correlation) is undefined for the given data."""


class EnvelopeError(FtcaError):
    """Base class for model-envelope parse failures."""


class VersionError(EnvelopeError):
    """Envelope declares an unsupported format version."""


class TruncatedError(EnvelopeError):
    """Envelope payload ends before the declared content is complete."""


class ChecksumError(EnvelopeError):
    """Envelope payload does not match its declared CRC-32."""


class FrameTooLargeError(FtcaError):
    """Wire frame body exceeds the protocol size bound."""


class IncompleteFrameError(FtcaError):
    """Byte stream ended in the middle of a wire frame."""


class ProtocolError(FtcaError):
    """Peer violated the wire protocol or replied with an error."""


class ConnectError(FtcaError):
    """A connection to the remote node could not be established."""


class PipelineError(FtcaError):
    """A pipeline stage failed; carries the stage tag."""

    def __init__(self, stage: str, message: str):
        super().__init__(f"[{stage}] {message}")
        self.stage = stage


class UsageError(FtcaError):
    """Invalid command-line or task-file input."""
