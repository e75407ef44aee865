"""Exception hierarchy shared across the package.

The CLI maps these onto distinct exit codes: configuration problems,
data/format problems, and numerical failures are kept separate so batch
drivers can tell them apart.
"""


class PsyscaleError(Exception):
    """Base class for all errors raised by this package."""


class ConfigError(PsyscaleError):
    """Bad or missing configuration (keys, modes, thresholds)."""


class DataError(PsyscaleError):
    """Bad input data: files, schemas, alignments."""


class SchemaError(DataError):
    """A delimited file does not match the declared schema."""


class ParseError(DataError):
    """A row or field could not be parsed; message names the location."""


class FormatError(DataError):
    """A binary file is corrupt, truncated, or not ours."""


class AlignmentError(DataError):
    """Response rows and feature vectors could not be joined."""


class NumericalError(PsyscaleError):
    """A solver or statistic failed on otherwise well-formed input."""
