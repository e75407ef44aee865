"""Writer for the versioned token-vector bundle format (.vbun).

The byte layout is frozen so the analysis harness can read these files
without sharing code: little-endian integers, u32-length-prefixed UTF-8
strings, float32 vector payloads.
"""

from __future__ import annotations

import os
import struct
import tempfile
from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

import numpy as np

MAGIC = b"PSVB"
VERSION = 1


@dataclass(frozen=True)
class BundleToken:
    doc_id: str
    token_index: int
    sentence_id: int
    word_index: int
    vector: np.ndarray


@dataclass(frozen=True)
class BundleMeta:
    model_name: str
    family: str
    parameter_count: int
    d_model: int
    training_steps: int
    init_seed: Optional[int]


def _pack_string(value: str) -> bytes:
    raw = value.encode("utf-8")
    return struct.pack("<I", len(raw)) + raw


def write_bundle(path: str, meta: BundleMeta,
                 tokens: Sequence[BundleToken]) -> None:
    last_index: Tuple[str, int] = ("", -1)
    parts = [
        MAGIC,
        struct.pack("<H", VERSION),
        _pack_string(meta.model_name),
        _pack_string(meta.family),
        struct.pack("<Q", meta.parameter_count),
        struct.pack("<I", meta.d_model),
        struct.pack("<Q", meta.training_steps),
        struct.pack("<B", 0 if meta.init_seed is None else 1),
        struct.pack("<q", meta.init_seed or 0),
        struct.pack("<Q", len(tokens)),
    ]
    for token in tokens:
        vector = np.asarray(token.vector, dtype="<f4")
        if vector.shape != (meta.d_model,):
            raise ValueError(
                f"vector length {vector.shape} != d_model {meta.d_model}")
        if token.doc_id == last_index[0] and token.token_index <= last_index[1]:
            raise ValueError(
                f"token_index not increasing in doc {token.doc_id!r}")
        last_index = (token.doc_id, token.token_index)
        parts.append(_pack_string(token.doc_id))
        parts.append(struct.pack("<QQQ", token.token_index,
                                 token.sentence_id, token.word_index))
        parts.append(vector.tobytes())

    # temp-and-rename so readers never observe a partial file
    directory = os.path.dirname(os.path.abspath(path)) or "."
    os.makedirs(directory, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=directory, suffix=".vbun.tmp")
    try:
        with os.fdopen(fd, "wb") as handle:
            handle.write(b"".join(parts))
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.remove(tmp)
        raise
