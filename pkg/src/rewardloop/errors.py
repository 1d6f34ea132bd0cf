"""Exception hierarchy shared across the package."""


class RewardLoopError(Exception):
    """Base class for all package errors."""


class SpecificationError(RewardLoopError):
    """A configuration or domain object violates its declared invariants."""


class UsageError(RewardLoopError):
    """An operation was called outside its precondition."""


class ValidationError(RewardLoopError):
    """A feedback object failed structural validation."""


class TranslationError(RewardLoopError):
    """A measurement cannot be translated; names the missing variable."""


class RecordParseError(RewardLoopError):
    """A serialized record is malformed.

    ``offset`` is the byte offset of the failure within the record,
    ``seq`` the sequence number when parsing a log stream.
    """

    def __init__(self, message: str, offset: int = 0, seq: int | None = None):
        super().__init__(message)
        self.offset = offset
        self.seq = seq


class ResolutionError(RewardLoopError):
    """A target reference cannot be resolved against the replay buffer."""


class EstimationError(RewardLoopError):
    """A quality estimator has no usable data."""


class DivergenceError(RewardLoopError):
    """Training produced non-finite values; carries the epoch or round."""

    def __init__(self, message: str, epoch: int | None = None):
        super().__init__(message)
        self.epoch = epoch
