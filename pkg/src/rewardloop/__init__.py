"""Reward learning from typed human feedback on gridworlds."""

__version__ = "0.1.0"

from .errors import (DivergenceError, EstimationError, RecordParseError,
                     ResolutionError, RewardLoopError, SpecificationError,
                     TranslationError, UsageError, ValidationError)

__all__ = [
    "DivergenceError", "EstimationError", "RecordParseError", "ResolutionError",
    "RewardLoopError", "SpecificationError", "TranslationError", "UsageError",
    "ValidationError", "__version__",
]
