"""Exception taxonomy.

Errors fall into three buckets that the CLI maps onto exit codes:
``ConfigError`` -> 2, ``DataError`` -> 3, ``ModelError`` -> 4.
"""


class LusScoreError(Exception):
    """Base class for every error raised by this package."""

    exit_code = 1


class ConfigError(LusScoreError):
    exit_code = 2


class DataError(LusScoreError):
    exit_code = 3


class ModelError(LusScoreError):
    exit_code = 4


# --- manifest / cohort errors -------------------------------------------------

class MalformedRow(DataError):
    """Manifest row with a bad column count or an unparsable field."""


class InvalidScore(DataError):
    """Severity label outside {0, 1, 2, 3}."""


class DuplicateImageId(DataError):
    """The same image_id appears twice in one manifest."""


class UnknownZone(DataError):
    """Zone string is neither empty nor one of the 12 canonical names."""


class ContradictoryStatus(DataError):
    """One patient appears with both covid statuses."""


class TooFewPatients(DataError):
    """A non-empty status group has fewer patients than requested folds."""


# --- training / evaluation errors ---------------------------------------------

class DimensionMismatch(DataError):
    """Vector or matrix shapes are inconsistent with the declared dimensions."""


class EmptyTrainingSet(DataError):
    pass


class InconsistentDimensions(DataError):
    pass


class LengthMismatch(DataError):
    pass


class EmptyInput(DataError):
    pass


class DegenerateClasses(DataError):
    """Both a positive and a negative example are required."""


class CacheFileError(DataError):
    """Feature cache file is corrupt or does not match the expected header."""


# --- model-file errors ----------------------------------------------------------

class ModelFileUnreadable(ModelError):
    """Model file missing, truncated, or not parsable as ONNX."""


class UnsupportedOperator(ModelFileUnreadable):
    """Model parses but uses an operator this runtime does not implement."""


class InferenceFailure(ModelError):
    """The loaded graph raised or produced non-finite values at run time."""
