"""Per-token final-layer vector extraction into binary bundles."""

from .bundle import BundleMeta, BundleToken, write_bundle
from .catalog import ARCHITECTURES, FULLY_TRAINED_STEPS, find_architecture
from .corpus import (
    CorpusWord,
    DocText,
    align_offsets,
    build_documents,
    read_corpus,
)
from .errors import (
    AlignmentError,
    CorpusError,
    ExtractorError,
    ModelError,
    UsageError,
)
from .extract import extract, train_tokenizer

__version__ = "0.1.0"

__all__ = [
    "ARCHITECTURES",
    "AlignmentError",
    "BundleMeta",
    "BundleToken",
    "CorpusError",
    "CorpusWord",
    "DocText",
    "ExtractorError",
    "FULLY_TRAINED_STEPS",
    "ModelError",
    "UsageError",
    "align_offsets",
    "build_documents",
    "extract",
    "find_architecture",
    "read_corpus",
    "train_tokenizer",
    "write_bundle",
]
