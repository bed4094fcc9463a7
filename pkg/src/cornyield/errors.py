"""Exception types shared across the toolkit."""


class ToolkitError(Exception):
    """Base class for all toolkit errors."""


# -- dataset ----------------------------------------------------------------

class MalformedCsvError(ToolkitError):
    """CSV header does not match the schema, or a row is ragged."""


class SchemaMismatchError(ToolkitError):
    """Two tables that must share a schema do not."""


class EmptyDatasetError(ToolkitError):
    """An operation removed (or was handed) every row."""


class CountMismatchError(ToolkitError):
    """Split counts do not sum to the row count."""


class UnknownCategoryError(ToolkitError):
    """A categorical value is absent from the declared category list."""


# -- timeseries -------------------------------------------------------------

class SeriesTooShortError(ToolkitError):
    """Series has too few observations for the requested operation."""


class NonConvergenceError(ToolkitError):
    """Optimizer exceeded its iteration cap without converging."""


# -- feature selection / metrics --------------------------------------------

class LengthMismatchError(ToolkitError):
    """Paired vectors have different lengths."""


class DegenerateInputError(ToolkitError):
    """Input is constant, so the statistic is undefined."""


class EmptySelectionError(ToolkitError):
    """No variable survives the selection threshold."""


class EmptyInputError(ToolkitError):
    """Operation requires at least one element."""


# -- models -----------------------------------------------------------------

class ShapeMismatchError(ToolkitError):
    """Input width does not match the model's expected width."""


class NonFiniteLossError(ToolkitError):
    """Training loss became NaN or infinite (divergence)."""


# -- tuning / evaluation ----------------------------------------------------

class TooFewRowsError(ToolkitError):
    """Not enough rows for the requested number of folds."""


class DegenerateResampleError(ToolkitError):
    """Bootstrap resample left no out-of-bag rows after retries."""


class MissingFieldError(ToolkitError):
    """A required named field is absent from a record."""


# -- serving ----------------------------------------------------------------

class UnknownStateError(ToolkitError):
    """Request names a state outside the model's category list."""


class NonFiniteValueError(ToolkitError):
    """Request contains a NaN or infinite numeric value."""


class VersionMismatchError(ToolkitError):
    """Model file declares an unsupported format version."""


class CorruptFileError(ToolkitError):
    """Model file cannot be parsed or fails structural checks."""


class ConfigError(ToolkitError):
    """Pipeline configuration is missing a key or references a bad path."""
