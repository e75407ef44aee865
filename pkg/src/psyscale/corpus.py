"""Canonical data model and file formats for responses, vectors, and partitions.

Two on-disk formats live here:

* response tables: tab-delimited UTF-8 text with a named header, one row
  per response event (a word reading time, a per-sentence BOLD value, or
  one scan of a BOLD time series);
* vector bundles: a little-endian binary container for per-token
  final-layer vectors plus model metadata.  See ``docs/formats.md`` for
  the byte-exact layout; readers and writers here are the reference
  implementation of that document.

All types are immutable after construction and safe to share across
threads.
"""

from __future__ import annotations

import enum
import hashlib
import io
import struct
from dataclasses import dataclass, field
from typing import Dict, Iterable, Iterator, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np

from .errors import ConfigError, DataError, FormatError, ParseError, SchemaError

WordKey = Tuple[str, int, int]  # (doc_id, sentence_id, word_index)


class ResponseKind(enum.Enum):
    """What a response table measures; controls schema and validation."""

    SPR = "spr"                          # self-paced reading times, ms
    ET = "et"                            # eye-tracking go-past durations, ms
    FMRI_TIMESERIES = "fmri_timeseries"  # BOLD scans on a fixed TR grid
    FMRI_SENTENCE = "fmri_sentence"      # per-sentence BOLD scalars


class RowFlag(enum.Flag):
    """Exclusion-relevant annotations carried by a response row."""

    NONE = 0
    SENTENCE_INITIAL = enum.auto()
    SENTENCE_FINAL = enum.auto()
    DOC_INITIAL = enum.auto()
    DOC_FINAL = enum.auto()
    LINE_BOUNDARY = enum.auto()
    SCREEN_BOUNDARY = enum.auto()
    UNFIXATED = enum.auto()


# column name -> flag, for the optional 0/1 flag columns of the text format
FLAG_COLUMNS: Mapping[str, RowFlag] = {
    "sentence_initial": RowFlag.SENTENCE_INITIAL,
    "sentence_final": RowFlag.SENTENCE_FINAL,
    "doc_initial": RowFlag.DOC_INITIAL,
    "doc_final": RowFlag.DOC_FINAL,
    "line_boundary": RowFlag.LINE_BOUNDARY,
    "screen_boundary": RowFlag.SCREEN_BOUNDARY,
    "unfixated": RowFlag.UNFIXATED,
}

_MANDATORY_COLUMNS = (
    "subject_id",
    "doc_id",
    "sentence_id",
    "word_index",
    "word_text",
    "response",
)


@dataclass(frozen=True)
class ResponseRecord:
    """One human response event (one word's RT, or one BOLD value)."""

    subject_id: str
    doc_id: str
    sentence_id: int
    word_index: int
    word_text: str
    response: float
    onset_time: Optional[float] = None       # seconds; fMRI time series only
    word_position: Optional[int] = None      # document-linear order; ET only
    flags: RowFlag = RowFlag.NONE

    def __post_init__(self):
        if self.sentence_id < 0 or self.word_index < 0:
            raise DataError(
                f"negative key component in {self.key}: "
                f"sentence_id={self.sentence_id}, word_index={self.word_index}"
            )
        if not np.isfinite(self.response):
            raise DataError(f"non-finite response for {self.key}")

    @property
    def word_key(self) -> WordKey:
        return (self.doc_id, self.sentence_id, self.word_index)

    @property
    def key(self):
        """Unique row key within a corpus (onset disambiguates fMRI repeats)."""
        return (self.doc_id, self.sentence_id, self.word_index,
                self.subject_id, self.onset_time)


class ResponseTable:
    """Immutable ordered collection of ResponseRecords of one kind."""

    def __init__(self, records: Iterable[ResponseRecord], kind: ResponseKind):
        self._records: Tuple[ResponseRecord, ...] = tuple(records)
        self.kind = kind
        seen = set()
        for rec in self._records:
            if rec.key in seen:
                raise DataError(f"duplicate row key {rec.key}")
            seen.add(rec.key)
            if kind in (ResponseKind.SPR, ResponseKind.ET) and rec.response <= 0:
                raise DataError(
                    f"non-positive millisecond response {rec.response!r} for {rec.key}"
                )

    def __len__(self) -> int:
        return len(self._records)

    def __iter__(self) -> Iterator[ResponseRecord]:
        return iter(self._records)

    def __getitem__(self, i: int) -> ResponseRecord:
        return self._records[i]

    def __eq__(self, other) -> bool:
        return (isinstance(other, ResponseTable)
                and self.kind == other.kind
                and self._records == other._records)

    @property
    def records(self) -> Tuple[ResponseRecord, ...]:
        return self._records

    def responses(self) -> np.ndarray:
        return np.array([r.response for r in self._records], dtype=np.float64)

    def subjects(self) -> List[str]:
        out, seen = [], set()
        for r in self._records:
            if r.subject_id not in seen:
                seen.add(r.subject_id)
                out.append(r.subject_id)
        return out

    def row_keys(self) -> List[tuple]:
        return [r.key for r in self._records]

    def word_keys(self) -> List[WordKey]:
        return [r.word_key for r in self._records]


def _parse_int(text: str, column: str, row: int) -> int:
    try:
        return int(text)
    except ValueError:
        raise ParseError(f"row {row}: non-integer {column} {text!r}") from None


def _parse_float(text: str, column: str, row: int) -> float:
    try:
        return float(text)
    except ValueError:
        raise ParseError(f"row {row}: non-numeric {column} {text!r}") from None


def read_response_table(path, kind: ResponseKind) -> ResponseTable:
    """Parse a delimited response file.

    Rows are numbered from 1 (the header is row 0) and any malformed row
    aborts the parse with its row number; nothing is silently dropped.
    """
    with open(path, "r", encoding="utf-8", newline="") as fh:
        lines = fh.read().splitlines()
    if not lines:
        raise SchemaError(f"{path}: empty file")

    header = lines[0].split("\t")
    required = list(_MANDATORY_COLUMNS)
    if kind is ResponseKind.FMRI_TIMESERIES:
        required.append("onset_time")
    missing = [c for c in required if c not in header]
    if missing:
        raise SchemaError(f"{path}: missing mandatory column(s) {missing} "
                          f"for kind {kind.value}")
    col = {name: i for i, name in enumerate(header)}

    records = []
    for row_no, line in enumerate(lines[1:], start=1):
        if not line:
            continue
        fields = line.split("\t")
        if len(fields) != len(header):
            raise ParseError(f"row {row_no}: expected {len(header)} fields, "
                             f"got {len(fields)}")

        def get(name):
            return fields[col[name]]

        flags = RowFlag.NONE
        for name, flag in FLAG_COLUMNS.items():
            if name in col and get(name).strip() == "1":
                flags |= flag

        onset = None
        if "onset_time" in col and get("onset_time") != "":
            onset = _parse_float(get("onset_time"), "onset_time", row_no)
        word_pos = None
        if "word_position" in col and get("word_position") != "":
            word_pos = _parse_int(get("word_position"), "word_position", row_no)

        records.append(ResponseRecord(
            subject_id=get("subject_id"),
            doc_id=get("doc_id"),
            sentence_id=_parse_int(get("sentence_id"), "sentence_id", row_no),
            word_index=_parse_int(get("word_index"), "word_index", row_no),
            word_text=get("word_text"),
            response=_parse_float(get("response"), "response", row_no),
            onset_time=onset,
            word_position=word_pos,
            flags=flags,
        ))
    return ResponseTable(records, kind)


def write_response_table(table: ResponseTable, path) -> None:
    """Write a table in the same delimited format the reader accepts."""
    has_onset = any(r.onset_time is not None for r in table)
    has_pos = any(r.word_position is not None for r in table)
    columns = list(_MANDATORY_COLUMNS)
    if has_onset:
        columns.append("onset_time")
    if has_pos:
        columns.append("word_position")
    columns.extend(FLAG_COLUMNS)

    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\t".join(columns) + "\n")
        for r in table:
            row = [r.subject_id, r.doc_id, str(r.sentence_id), str(r.word_index),
                   r.word_text, format(r.response, ".17g")]
            if has_onset:
                row.append("" if r.onset_time is None else format(r.onset_time, ".17g"))
            if has_pos:
                row.append("" if r.word_position is None else str(r.word_position))
            row.extend("1" if r.flags & f else "0" for f in FLAG_COLUMNS.values())
            fh.write("\t".join(row) + "\n")


# ---------------------------------------------------------------------------
# Vector bundles
# ---------------------------------------------------------------------------

BUNDLE_MAGIC = b"PSVB"
BUNDLE_VERSION = 1


@dataclass(frozen=True)
class TokenVector:
    """One subword token's final-layer vector, keyed to a corpus word."""

    doc_id: str
    token_index: int
    sentence_id: int
    word_index: int
    vector: np.ndarray  # float32, shape (d_model,)

    @property
    def word_key(self) -> WordKey:
        return (self.doc_id, self.sentence_id, self.word_index)

    def __eq__(self, other) -> bool:
        return (isinstance(other, TokenVector)
                and self.doc_id == other.doc_id
                and self.token_index == other.token_index
                and self.sentence_id == other.sentence_id
                and self.word_index == other.word_index
                and self.vector.dtype == other.vector.dtype
                and np.array_equal(self.vector, other.vector))


@dataclass(frozen=True)
class VectorBundle:
    """Per-token vectors from one model variant at one training step."""

    model_name: str
    family: str
    parameter_count: int
    d_model: int
    training_steps: int
    tokens: Tuple[TokenVector, ...]
    init_seed: Optional[int] = None

    def __post_init__(self):
        if self.parameter_count <= 0:
            raise DataError("parameter_count must be positive")
        if self.d_model <= 0:
            raise DataError("d_model must be positive")
        if self.training_steps < 0:
            raise DataError("training_steps must be non-negative")
        object.__setattr__(self, "tokens", tuple(self.tokens))
        last_index: Dict[str, int] = {}
        for tok in self.tokens:
            if tok.vector.shape != (self.d_model,):
                raise DataError(
                    f"token {tok.doc_id}/{tok.token_index}: vector length "
                    f"{tok.vector.shape} != d_model {self.d_model}"
                )
            prev = last_index.get(tok.doc_id)
            if prev is not None and tok.token_index <= prev:
                raise DataError(
                    f"token_index not strictly increasing in doc {tok.doc_id!r}"
                )
            last_index[tok.doc_id] = tok.token_index

    @property
    def is_untrained(self) -> bool:
        return self.training_steps == 0

    def __eq__(self, other) -> bool:
        return (isinstance(other, VectorBundle)
                and self.model_name == other.model_name
                and self.family == other.family
                and self.parameter_count == other.parameter_count
                and self.d_model == other.d_model
                and self.training_steps == other.training_steps
                and self.init_seed == other.init_seed
                and self.tokens == other.tokens)


def _write_str(fh, s: str) -> None:
    raw = s.encode("utf-8")
    fh.write(struct.pack("<I", len(raw)))
    fh.write(raw)


def _read_exact(fh, n: int) -> bytes:
    raw = fh.read(n)
    if len(raw) != n:
        raise FormatError(f"truncated file: wanted {n} bytes, got {len(raw)}")
    return raw


def _read_str(fh) -> str:
    (n,) = struct.unpack("<I", _read_exact(fh, 4))
    return _read_exact(fh, n).decode("utf-8")


def write_vector_bundle(bundle: VectorBundle, path) -> None:
    """Serialize a bundle; layout documented in docs/formats.md."""
    if not bundle.tokens:
        raise DataError("refusing to write a bundle with no tokens")
    buf = io.BytesIO()
    buf.write(BUNDLE_MAGIC)
    buf.write(struct.pack("<H", BUNDLE_VERSION))
    _write_str(buf, bundle.model_name)
    _write_str(buf, bundle.family)
    buf.write(struct.pack("<Q", bundle.parameter_count))
    buf.write(struct.pack("<I", bundle.d_model))
    buf.write(struct.pack("<Q", bundle.training_steps))
    if bundle.init_seed is None:
        buf.write(struct.pack("<Bq", 0, 0))
    else:
        buf.write(struct.pack("<Bq", 1, bundle.init_seed))
    buf.write(struct.pack("<Q", len(bundle.tokens)))
    for tok in bundle.tokens:
        _write_str(buf, tok.doc_id)
        buf.write(struct.pack("<QQQ", tok.token_index, tok.sentence_id,
                              tok.word_index))
        vec = np.ascontiguousarray(tok.vector, dtype="<f4")
        buf.write(vec.tobytes())
    with open(path, "wb") as fh:
        fh.write(buf.getvalue())


def read_vector_bundle(path) -> VectorBundle:
    """Parse a bundle file; raises FormatError on any structural damage."""
    with open(path, "rb") as fh:
        magic = _read_exact(fh, 4)
        if magic != BUNDLE_MAGIC:
            raise FormatError(f"{path}: bad magic {magic!r}")
        (version,) = struct.unpack("<H", _read_exact(fh, 2))
        if version != BUNDLE_VERSION:
            raise FormatError(f"{path}: unsupported version {version}")
        model_name = _read_str(fh)
        family = _read_str(fh)
        (parameter_count,) = struct.unpack("<Q", _read_exact(fh, 8))
        (d_model,) = struct.unpack("<I", _read_exact(fh, 4))
        (training_steps,) = struct.unpack("<Q", _read_exact(fh, 8))
        has_seed, seed = struct.unpack("<Bq", _read_exact(fh, 9))
        (n_tokens,) = struct.unpack("<Q", _read_exact(fh, 8))
        tokens = []
        for _ in range(n_tokens):
            doc_id = _read_str(fh)
            token_index, sentence_id, word_index = struct.unpack(
                "<QQQ", _read_exact(fh, 24))
            vec = np.frombuffer(_read_exact(fh, 4 * d_model), dtype="<f4").copy()
            tokens.append(TokenVector(doc_id, token_index, sentence_id,
                                      word_index, vec))
        if fh.read(1):
            raise FormatError(f"{path}: trailing bytes after declared payload")
    return VectorBundle(
        model_name=model_name,
        family=family,
        parameter_count=parameter_count,
        d_model=d_model,
        training_steps=training_steps,
        tokens=tuple(tokens),
        init_seed=seed if has_seed else None,
    )


# ---------------------------------------------------------------------------
# Partitions
# ---------------------------------------------------------------------------

class PartitionLabel(enum.Enum):
    FIT = "fit"
    EXPLORE = "explore"
    HELDOUT = "heldout"


class PartitionMode(enum.Enum):
    THREE_WAY = "three_way"
    CV5_BY_SUBJECT = "cv5_by_subject"


N_CV_FOLDS = 5


@dataclass(frozen=True)
class PartitionAssignment:
    """Per-row partition labels, aligned 1:1 with a ResponseTable.

    In THREE_WAY mode ``labels`` is populated; in CV mode ``folds`` holds a
    fold index in 0..4 per row and ``subjects`` the row's subject.
    """

    mode: PartitionMode
    row_keys: Tuple[tuple, ...]
    labels: Optional[Tuple[PartitionLabel, ...]] = None
    folds: Optional[Tuple[int, ...]] = None
    subjects: Optional[Tuple[str, ...]] = None
    seed: int = 0

    def __post_init__(self):
        n = len(self.row_keys)
        if self.mode is PartitionMode.THREE_WAY:
            if self.labels is None or len(self.labels) != n:
                raise DataError("THREE_WAY assignment needs one label per row")
        else:
            if (self.folds is None or self.subjects is None
                    or len(self.folds) != n or len(self.subjects) != n):
                raise DataError("CV assignment needs fold and subject per row")
            if any(f < 0 or f >= N_CV_FOLDS for f in self.folds):
                raise DataError("fold index out of range")

    def __len__(self) -> int:
        return len(self.row_keys)

    def mask(self, label: PartitionLabel) -> np.ndarray:
        if self.labels is None:
            raise DataError("mask() only applies to THREE_WAY assignments")
        return np.array([l is label for l in self.labels], dtype=bool)


def stable_hash64(key: str, seed: int) -> int:
    """Stable 64-bit hash of a key string, keyed by the partition seed.

    blake2b is overkill cryptographically but is in the stdlib, is stable
    across platforms and Python versions, and takes a key natively.
    """
    h = hashlib.blake2b(key.encode("utf-8"), digest_size=8,
                        key=struct.pack("<q", seed))
    return int.from_bytes(h.digest(), "little")


def write_partition(assignment: PartitionAssignment, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        if assignment.mode is PartitionMode.THREE_WAY:
            fh.write("doc_id\tsentence_id\tword_index\tsubject_id\tonset_time\tlabel\n")
            for key, label in zip(assignment.row_keys, assignment.labels):
                doc, sent, word, subj, onset = key
                onset_s = "" if onset is None else format(onset, ".17g")
                fh.write(f"{doc}\t{sent}\t{word}\t{subj}\t{onset_s}\t{label.value}\n")
        else:
            fh.write("doc_id\tsentence_id\tword_index\tsubject_id\tonset_time\tfold\n")
            for key, fold in zip(assignment.row_keys, assignment.folds):
                doc, sent, word, subj, onset = key
                onset_s = "" if onset is None else format(onset, ".17g")
                fh.write(f"{doc}\t{sent}\t{word}\t{subj}\t{onset_s}\t{fold}\n")


def read_partition(path, table: ResponseTable) -> PartitionAssignment:
    """Load an external partition file and align it to ``table``.

    Supports exact replication runs where the original assignment is
    supplied instead of the hashed one.
    """
    with open(path, "r", encoding="utf-8", newline="") as fh:
        lines = fh.read().splitlines()
    if not lines:
        raise SchemaError(f"{path}: empty partition file")
    header = lines[0].split("\t")
    is_cv = "fold" in header
    value_col = "fold" if is_cv else "label"
    for c in ("doc_id", "sentence_id", "word_index", "subject_id", value_col):
        if c not in header:
            raise SchemaError(f"{path}: missing column {c!r}")
    col = {name: i for i, name in enumerate(header)}

    by_key = {}
    for row_no, line in enumerate(lines[1:], start=1):
        if not line:
            continue
        fields = line.split("\t")
        onset_raw = fields[col["onset_time"]] if "onset_time" in col else ""
        key = (fields[col["doc_id"]],
               _parse_int(fields[col["sentence_id"]], "sentence_id", row_no),
               _parse_int(fields[col["word_index"]], "word_index", row_no),
               fields[col["subject_id"]],
               None if onset_raw == "" else float(onset_raw))
        by_key[key] = fields[col[value_col]]

    keys = tuple(table.row_keys())
    missing = [k for k in keys if k not in by_key]
    if missing:
        raise DataError(f"{path}: no partition entry for {len(missing)} rows, "
                        f"first missing key {missing[0]}")
    if is_cv:
        folds = tuple(int(by_key[k]) for k in keys)
        subjects = tuple(r.subject_id for r in table)
        return PartitionAssignment(PartitionMode.CV5_BY_SUBJECT, keys,
                                   folds=folds, subjects=subjects)
    labels = tuple(PartitionLabel(by_key[k]) for k in keys)
    return PartitionAssignment(PartitionMode.THREE_WAY, keys, labels=labels)
