class ExtractorError(Exception):
    """Base class for extractor failures."""


class UsageError(ExtractorError):
    """Invalid flags or option combinations."""


class CorpusError(ExtractorError):
    """Malformed or empty corpus input."""


class AlignmentError(ExtractorError):
    """Tokens that cannot be mapped back to corpus words."""


class ModelError(ExtractorError):
    """Unknown model, unavailable checkpoint, or architecture mismatch."""
