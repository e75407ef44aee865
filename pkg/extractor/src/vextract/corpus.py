"""Word-keyed corpus input and token-to-word alignment.

A corpus is a TSV with columns doc_id, sentence_id, word_index, word_text.
Each document's running text is its words joined by single spaces, in file
order; alignment maps tokenizer offsets back to those word spans.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, List, Sequence, Tuple

from .errors import AlignmentError, CorpusError

REQUIRED_COLUMNS = ("doc_id", "sentence_id", "word_index", "word_text")


@dataclass(frozen=True)
class CorpusWord:
    doc_id: str
    sentence_id: int
    word_index: int
    text: str


@dataclass(frozen=True)
class DocText:
    doc_id: str
    text: str
    words: Tuple[CorpusWord, ...]
    spans: Tuple[Tuple[int, int], ...]  # [start, end) per word


def read_corpus(path: str) -> List[CorpusWord]:
    try:
        with open(path, "r", encoding="utf-8") as handle:
            lines = handle.read().splitlines()
    except OSError as exc:
        raise CorpusError(f"cannot read corpus {path}: {exc}") from exc
    if not lines:
        raise CorpusError(f"corpus {path} is empty")
    header = lines[0].split("\t")
    missing = [c for c in REQUIRED_COLUMNS if c not in header]
    if missing:
        raise CorpusError(f"corpus {path} missing columns: {missing}")
    index = {name: header.index(name) for name in REQUIRED_COLUMNS}
    words = []
    for number, line in enumerate(lines[1:], start=2):
        if not line:
            continue
        cells = line.split("\t")
        if len(cells) != len(header):
            raise CorpusError(f"corpus {path} row {number}: "
                              f"expected {len(header)} cells, got {len(cells)}")
        try:
            words.append(CorpusWord(
                doc_id=cells[index["doc_id"]],
                sentence_id=int(cells[index["sentence_id"]]),
                word_index=int(cells[index["word_index"]]),
                text=cells[index["word_text"]],
            ))
        except ValueError as exc:
            raise CorpusError(f"corpus {path} row {number}: {exc}") from exc
    if not words:
        raise CorpusError(f"corpus {path} has no word rows")
    for word in words:
        if not word.text or word.text != word.text.strip():
            raise CorpusError(
                f"word {word.doc_id}/{word.sentence_id}/{word.word_index} "
                f"is empty or has surrounding whitespace")
    return words


def build_documents(words: Sequence[CorpusWord]) -> List[DocText]:
    grouped: Dict[str, List[CorpusWord]] = {}
    for word in words:
        grouped.setdefault(word.doc_id, []).append(word)
    docs = []
    for doc_id, doc_words in grouped.items():
        spans = []
        cursor = 0
        pieces = []
        for word in doc_words:
            if pieces:
                cursor += 1  # joining space
            spans.append((cursor, cursor + len(word.text)))
            pieces.append(word.text)
            cursor += len(word.text)
        docs.append(DocText(doc_id, " ".join(pieces), tuple(doc_words),
                            tuple(spans)))
    return docs


def align_offsets(doc: DocText,
                  offsets: Sequence[Tuple[int, int]]) -> List[int]:
    """Map each token offset to the index of the word containing its first
    non-space character. Raises if any token or word is left unmatched."""
    starts = [span[0] for span in doc.spans]
    assigned = []
    bad = []
    for start, end in offsets:
        pos = start
        while pos < end and doc.text[pos] == " ":
            pos += 1
        if pos >= end:
            bad.append((start, end))
            assigned.append(-1)
            continue
        # rightmost word starting at or before pos
        lo, hi = 0, len(starts) - 1
        while lo < hi:
            mid = (lo + hi + 1) // 2
            if starts[mid] <= pos:
                lo = mid
            else:
                hi = mid - 1
        if not (doc.spans[lo][0] <= pos < doc.spans[lo][1]):
            bad.append((start, end))
            assigned.append(-1)
            continue
        assigned.append(lo)
    if bad:
        raise AlignmentError(
            f"doc {doc.doc_id!r}: {len(bad)} token(s) unalignable to words "
            f"at offsets {bad[:10]}")
    covered = set(assigned)
    orphans = [i for i in range(len(doc.words)) if i not in covered]
    if orphans:
        keys = [(doc.words[i].sentence_id, doc.words[i].word_index)
                for i in orphans[:10]]
        raise AlignmentError(
            f"doc {doc.doc_id!r}: {len(orphans)} word(s) received no "
            f"tokens, first keys {keys}")
    if assigned != sorted(assigned):
        raise AlignmentError(
            f"doc {doc.doc_id!r}: token-to-word mapping is not monotone")
    return assigned
