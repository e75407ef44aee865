"""Exclusion rules, go-past computation, and deterministic partitioning.

All functions here are pure: they take immutable tables and return new
ones, so callers can parallelize by subject or document freely.
"""

from __future__ import annotations

from collections import OrderedDict
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Mapping, Optional, Sequence, Tuple

import numpy as np

from .corpus import (
    N_CV_FOLDS,
    PartitionAssignment,
    PartitionLabel,
    PartitionMode,
    ResponseKind,
    ResponseRecord,
    ResponseTable,
    RowFlag,
    stable_hash64,
)
from .errors import ConfigError, DataError, ParseError, SchemaError

RT_WINDOW_MS = (100.0, 3000.0)      # closed interval, inclusive at both ends
MAX_SKIP_WORDS = 4                  # saccades skipping more than this exclude
COMPREHENSION_MIN_CORRECT = 4       # per-subject aggregate threshold


@dataclass(frozen=True)
class FixationRecord:
    """One eye fixation; word_position is document-linear order."""

    subject_id: str
    doc_id: str
    word_position: int
    duration: float               # ms
    sequence_index: int           # temporal order within (subject, doc)

    def __post_init__(self):
        if self.word_position < 0:
            raise DataError("word_position must be non-negative")
        if self.duration <= 0:
            raise DataError("fixation duration must be positive")


@dataclass(frozen=True)
class ComprehensionScore:
    """Correct comprehension answers, aggregated per subject."""

    subject_id: str
    correct_answers: int

    def __post_init__(self):
        if self.correct_answers < 0:
            raise DataError("correct_answers must be non-negative")


@dataclass(frozen=True)
class FilterResult:
    """A filtered table plus an audit of exclusion counts per rule."""

    table: ResponseTable
    excluded: Mapping[str, int]

    @property
    def n_excluded(self) -> int:
        return sum(self.excluded.values())


def filter_spr(table: ResponseTable,
               scores: Iterable[ComprehensionScore],
               rt_window_ms: Tuple[float, float] = RT_WINDOW_MS,
               min_correct: int = COMPREHENSION_MIN_CORRECT) -> FilterResult:
    """Apply the self-paced-reading exclusion rules.

    Drops sentence-initial/-final words, every row of subjects below the
    comprehension threshold, and reading times outside the closed window.
    Each excluded row is counted under the first rule that fires.
    """
    if table.kind is not ResponseKind.SPR:
        raise ConfigError(f"filter_spr needs an SPR table, got {table.kind.value}")
    by_subject: Dict[str, int] = {}
    for s in scores:
        by_subject[s.subject_id] = s.correct_answers
    missing = sorted({r.subject_id for r in table} - set(by_subject))
    if missing:
        raise ConfigError(
            f"no comprehension scores for subject(s) {missing}; refusing to "
            "retain them silently")

    lo, hi = rt_window_ms
    counts = OrderedDict([("sentence_boundary", 0),
                          ("comprehension", 0),
                          ("rt_window", 0)])
    kept: List[ResponseRecord] = []
    for rec in table:
        if rec.flags & (RowFlag.SENTENCE_INITIAL | RowFlag.SENTENCE_FINAL):
            counts["sentence_boundary"] += 1
        elif by_subject[rec.subject_id] < min_correct:
            counts["comprehension"] += 1
        elif not (lo <= rec.response <= hi):
            counts["rt_window"] += 1
        else:
            kept.append(rec)
    return FilterResult(ResponseTable(kept, table.kind), counts)


def _fixations_by_trial(fixations: Sequence[FixationRecord]):
    trials: "OrderedDict[Tuple[str, str], List[FixationRecord]]" = OrderedDict()
    for fx in fixations:
        trials.setdefault((fx.subject_id, fx.doc_id), []).append(fx)
    for key, trial in trials.items():
        for a, b in zip(trial, trial[1:]):
            if b.sequence_index <= a.sequence_index:
                raise DataError(
                    f"fixations for {key} not sorted by sequence_index")
    return trials


def compute_go_past(fixations: Sequence[FixationRecord]) -> ResponseTable:
    """Compute go-past durations from a fixation stream.

    For a word first fixated at sequence position i, go-past is the sum of
    fixation durations from i up to (exclusive) the first later fixation on
    a word beyond it.  Words never fixated produce no row.  Output rows use
    document-linear keys: sentence_id 0 and word_index = word_position.
    """
    records: List[ResponseRecord] = []
    for (subject, doc), trial in _fixations_by_trial(fixations).items():
        first_seen: "OrderedDict[int, int]" = OrderedDict()  # word_pos -> index
        for i, fx in enumerate(trial):
            if fx.word_position not in first_seen:
                first_seen[fx.word_position] = i
        for word_pos, start in first_seen.items():
            total = 0.0
            for fx in trial[start:]:
                if fx.word_position > word_pos:
                    break
                total += fx.duration
            records.append(ResponseRecord(
                subject_id=subject,
                doc_id=doc,
                sentence_id=0,
                word_index=word_pos,
                word_text="",
                response=total,
                word_position=word_pos,
            ))
    return ResponseTable(records, ResponseKind.ET)


def first_fixation_skips(fixations: Sequence[FixationRecord]) -> Dict[tuple, int]:
    """Forward skip size of the saccade that first reaches each word.

    Returns (subject, doc, word_position) -> number of words skipped; words
    first reached by a regression (backward saccade) get 0.
    """
    skips: Dict[tuple, int] = {}
    for (subject, doc), trial in _fixations_by_trial(fixations).items():
        prev_pos: Optional[int] = None
        for fx in trial:
            key = (subject, doc, fx.word_position)
            if key not in skips:
                if prev_pos is not None and fx.word_position > prev_pos:
                    skips[key] = fx.word_position - prev_pos - 1
                else:
                    skips[key] = 0
            if prev_pos is None or fx.word_position != prev_pos:
                prev_pos = fx.word_position
    return skips


def filter_et(table: ResponseTable,
              fixations: Sequence[FixationRecord],
              max_skip_words: int = MAX_SKIP_WORDS) -> FilterResult:
    """Apply the eye-tracking exclusion rules to a go-past table.

    Drops unfixated words, words first reached by a saccade skipping more
    than ``max_skip_words`` words, sentence/document boundary words, and
    (when annotated) line and screen boundary words.
    """
    if table.kind is not ResponseKind.ET:
        raise ConfigError(f"filter_et needs an ET table, got {table.kind.value}")
    if any(r.word_position is None for r in table):
        raise ConfigError("ET table rows lack word_position; cannot link "
                          "responses to the fixation stream")
    fixated = {(fx.subject_id, fx.doc_id, fx.word_position) for fx in fixations}
    skips = first_fixation_skips(fixations)

    boundary = (RowFlag.SENTENCE_INITIAL | RowFlag.SENTENCE_FINAL
                | RowFlag.DOC_INITIAL | RowFlag.DOC_FINAL)
    line_screen = RowFlag.LINE_BOUNDARY | RowFlag.SCREEN_BOUNDARY
    counts = OrderedDict([("unfixated", 0),
                          ("skip", 0),
                          ("sentence_doc_boundary", 0),
                          ("line_screen_boundary", 0)])
    kept: List[ResponseRecord] = []
    for rec in table:
        link = (rec.subject_id, rec.doc_id, rec.word_position)
        if rec.flags & RowFlag.UNFIXATED or link not in fixated:
            counts["unfixated"] += 1
        elif skips.get(link, 0) > max_skip_words:
            counts["skip"] += 1
        elif rec.flags & boundary:
            counts["sentence_doc_boundary"] += 1
        elif rec.flags & line_screen:
            counts["line_screen_boundary"] += 1
        else:
            kept.append(rec)
    return FilterResult(ResponseTable(kept, table.kind), counts)


def _read_tsv(path, required_columns):
    with open(path, "r", encoding="utf-8", newline="") as fh:
        lines = fh.read().splitlines()
    if not lines:
        raise SchemaError(f"{path}: empty file")
    header = lines[0].split("\t")
    missing = [c for c in required_columns if c not in header]
    if missing:
        raise SchemaError(f"{path}: missing column(s) {missing}")
    col = {name: i for i, name in enumerate(header)}
    rows = []
    for row_no, line in enumerate(lines[1:], start=1):
        if not line:
            continue
        fields = line.split("\t")
        if len(fields) != len(header):
            raise ParseError(f"{path} row {row_no}: expected {len(header)} "
                             f"fields, got {len(fields)}")
        rows.append((row_no, {name: fields[i] for name, i in col.items()}))
    return rows


def read_comprehension_scores(path) -> List[ComprehensionScore]:
    """Load per-subject comprehension scores (subject_id, correct_answers)."""
    scores = []
    for row_no, row in _read_tsv(path, ("subject_id", "correct_answers")):
        try:
            correct = int(row["correct_answers"])
        except ValueError:
            raise ParseError(f"{path} row {row_no}: non-integer "
                             f"correct_answers {row['correct_answers']!r}") from None
        scores.append(ComprehensionScore(row["subject_id"], correct))
    return scores


def read_fixations(path) -> List[FixationRecord]:
    """Load a fixation stream (subject, doc, word_position, duration, order)."""
    required = ("subject_id", "doc_id", "word_position", "duration",
                "sequence_index")
    fixations = []
    for row_no, row in _read_tsv(path, required):
        try:
            fixations.append(FixationRecord(
                subject_id=row["subject_id"],
                doc_id=row["doc_id"],
                word_position=int(row["word_position"]),
                duration=float(row["duration"]),
                sequence_index=int(row["sequence_index"]),
            ))
        except ValueError:
            raise ParseError(f"{path} row {row_no}: malformed fixation "
                             f"fields {row!r}") from None
    return fixations


def attach_go_past(table: ResponseTable,
                   go_past: ResponseTable) -> ResponseTable:
    """Replace ET responses with go-past durations where words were fixated.

    Rows with no go-past entry are left untouched; filter_et drops them as
    unfixated.
    """
    durations = {(r.subject_id, r.doc_id, r.word_position): r.response
                 for r in go_past}
    records = []
    for rec in table:
        key = (rec.subject_id, rec.doc_id, rec.word_position)
        if key in durations:
            records.append(ResponseRecord(
                subject_id=rec.subject_id,
                doc_id=rec.doc_id,
                sentence_id=rec.sentence_id,
                word_index=rec.word_index,
                word_text=rec.word_text,
                response=durations[key],
                onset_time=rec.onset_time,
                word_position=rec.word_position,
                flags=rec.flags,
            ))
        else:
            records.append(rec)
    return ResponseTable(records, table.kind)


def partition(table: ResponseTable,
              mode: PartitionMode,
              seed: int) -> PartitionAssignment:
    """Assign each row a deterministic partition label or CV fold.

    THREE_WAY hashes (subject, doc, sentence) so all rows of a
    sentence-subject pair share a label; buckets 0-1 -> FIT, 2 -> EXPLORE,
    3 -> HELDOUT, approximating a 50/25/25 split.  CV5 orders each
    subject's sentences by hash and deals them round-robin into 5 folds.
    """
    if len(table) == 0:
        raise DataError("cannot partition an empty table")
    keys = tuple(table.row_keys())

    if mode is PartitionMode.THREE_WAY:
        labels = []
        for rec in table:
            h = stable_hash64(
                f"{rec.subject_id}|{rec.doc_id}|{rec.sentence_id}", seed)
            bucket = h % 4
            if bucket <= 1:
                labels.append(PartitionLabel.FIT)
            elif bucket == 2:
                labels.append(PartitionLabel.EXPLORE)
            else:
                labels.append(PartitionLabel.HELDOUT)
        return PartitionAssignment(mode, keys, labels=tuple(labels), seed=seed)

    if mode is PartitionMode.CV5_BY_SUBJECT:
        # fold of a (subject, doc, sentence) item = its rank in hash order
        # among that subject's items, mod 5
        items_by_subject: Dict[str, set] = {}
        for rec in table:
            items_by_subject.setdefault(rec.subject_id, set()).add(
                (rec.doc_id, rec.sentence_id))
        fold_of: Dict[tuple, int] = {}
        for subject, items in items_by_subject.items():
            ranked = sorted(
                items,
                key=lambda it: stable_hash64(f"{subject}|{it[0]}|{it[1]}", seed))
            for rank, item in enumerate(ranked):
                fold_of[(subject, item[0], item[1])] = rank % N_CV_FOLDS
        folds = tuple(fold_of[(r.subject_id, r.doc_id, r.sentence_id)]
                      for r in table)
        subjects = tuple(r.subject_id for r in table)
        return PartitionAssignment(mode, keys, folds=folds, subjects=subjects,
                                   seed=seed)

    raise ConfigError(f"unknown partition mode {mode!r}")
