"""Turns per-token vectors into per-response predictor rows.

Covers subword-to-word averaging, sentence-final vector selection,
region aggregation for per-sentence BOLD, and hemodynamic convolution for
BOLD time series.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Dict, Mapping, Optional, Sequence, Tuple

import numpy as np

from .corpus import ResponseTable, VectorBundle, WordKey
from .errors import AlignmentError, ConfigError, DataError

DEFAULT_TR = 2.0  # seconds between BOLD scans


@dataclass(frozen=True)
class DesignMatrix:
    """Predictor matrix with row keys aligned 1:1 to a response table."""

    values: np.ndarray          # (N, d) float64
    row_keys: Tuple[tuple, ...]

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=np.float64)
        object.__setattr__(self, "values", vals)
        if vals.ndim != 2:
            raise DataError(f"design matrix must be 2-D, got shape {vals.shape}")
        if vals.shape[0] != len(self.row_keys):
            raise DataError("row_keys length does not match matrix rows")
        if len(set(self.row_keys)) != len(self.row_keys):
            raise DataError("duplicate row keys in design matrix")
        if not np.all(np.isfinite(vals)):
            raise DataError("design matrix contains non-finite entries")

    @property
    def n_rows(self) -> int:
        return self.values.shape[0]

    @property
    def n_cols(self) -> int:
        return self.values.shape[1]


def word_vectors(bundle: VectorBundle) -> Dict[WordKey, np.ndarray]:
    """Average each word's subword-token vectors into one word vector."""
    sums: Dict[WordKey, np.ndarray] = {}
    counts: Dict[WordKey, int] = {}
    for tok in bundle.tokens:
        key = tok.word_key
        vec = tok.vector.astype(np.float64)
        if key in sums:
            sums[key] += vec
            counts[key] += 1
        else:
            sums[key] = vec.copy()
            counts[key] = 1
    return {key: sums[key] / counts[key] for key in sums}


def sentence_final_vector(bundle: VectorBundle) -> Dict[Tuple[str, int], np.ndarray]:
    """Vector of the last word of each sentence (subword-averaged)."""
    by_word = word_vectors(bundle)
    final_word: Dict[Tuple[str, int], int] = {}
    for doc_id, sentence_id, word_index in by_word:
        sent = (doc_id, sentence_id)
        if sent not in final_word or word_index > final_word[sent]:
            final_word[sent] = word_index
    return {sent: by_word[(sent[0], sent[1], w)]
            for sent, w in final_word.items()}


@dataclass(frozen=True)
class HrfKernel:
    """Double-gamma hemodynamic response kernel.

    Defaults are the canonical shape: response peaking at 6 s, undershoot
    at 16 s, unit dispersions, 6:1 peak-to-undershoot ratio.
    """

    peak_delay: float = 6.0
    undershoot_delay: float = 16.0
    peak_dispersion: float = 1.0
    undershoot_dispersion: float = 1.0
    peak_undershoot_ratio: float = 6.0
    dt: float = 0.1   # sampling resolution of sample(), seconds

    def __post_init__(self):
        for name in ("peak_delay", "undershoot_delay", "peak_dispersion",
                     "undershoot_dispersion", "peak_undershoot_ratio", "dt"):
            if getattr(self, name) <= 0:
                raise ConfigError(f"HRF parameter {name} must be positive")

    def evaluate(self, t) -> np.ndarray:
        """Kernel value at time(s) t; exactly 0 for t < 0 (causality)."""
        t = np.asarray(t, dtype=np.float64)
        out = np.zeros_like(t)
        pos = t > 0
        tp = t[pos]
        out[pos] = (_gamma_pdf(tp, self.peak_delay / self.peak_dispersion,
                               self.peak_dispersion)
                    - _gamma_pdf(tp, self.undershoot_delay / self.undershoot_dispersion,
                                 self.undershoot_dispersion)
                    / self.peak_undershoot_ratio)
        return out

    def sample(self, duration: float = 32.0) -> np.ndarray:
        """Kernel sampled on [0, duration) at resolution dt."""
        grid = np.arange(0.0, duration, self.dt)
        return self.evaluate(grid)


def _gamma_pdf(t: np.ndarray, shape: float, scale: float) -> np.ndarray:
    logpdf = ((shape - 1.0) * np.log(t) - t / scale
              - math.lgamma(shape) - shape * math.log(scale))
    return np.exp(logpdf)


def hrf_convolve(event_vectors: np.ndarray,
                 onsets: Sequence[float],
                 scan_times: Sequence[float],
                 kernel: Optional[HrfKernel] = None) -> np.ndarray:
    """Convolve event-locked vectors with the HRF onto a scan grid.

    Row s, column j of the result is sum_e v[e, j] * HRF(scan_times[s] -
    onsets[e]); events after a scan contribute nothing to it.
    """
    kernel = kernel or HrfKernel()
    vectors = np.asarray(event_vectors, dtype=np.float64)
    onsets = np.asarray(onsets, dtype=np.float64)
    scan_times = np.asarray(scan_times, dtype=np.float64)
    if vectors.ndim != 2 or vectors.shape[0] != onsets.shape[0]:
        raise DataError("event vectors must be (n_events, d) matching onsets")
    if scan_times.size == 0:
        raise DataError("empty scan grid")
    if np.any(np.diff(onsets) < 0):
        raise DataError("onsets must be non-decreasing")
    if np.any(np.diff(scan_times) <= 0):
        raise DataError("scan grid must be strictly increasing")

    lags = scan_times[:, None] - onsets[None, :]      # (n_scans, n_events)
    return kernel.evaluate(lags) @ vectors


def aggregate_bold(per_region: Mapping[str, float], mode: str = "mean") -> float:
    """Collapse per-region BOLD values into the per-sentence scalar."""
    if not per_region:
        raise DataError("empty region map")
    values = np.array(list(per_region.values()), dtype=np.float64)
    if mode == "mean":
        return float(np.mean(values))
    if mode == "median":
        return float(np.median(values))
    raise ConfigError(f"unknown BOLD aggregation mode {mode!r}")


def build_design(table: ResponseTable,
                 features: Mapping[WordKey, np.ndarray]) -> DesignMatrix:
    """Join feature vectors onto response rows, preserving table order.

    Missing keys are all enumerated in the raised error; nothing is ever
    imputed.
    """
    missing = [r.word_key for r in table if r.word_key not in features]
    if missing:
        shown = ", ".join(map(str, missing[:10]))
        more = "" if len(missing) <= 10 else f" (+{len(missing) - 10} more)"
        raise AlignmentError(
            f"{len(missing)} response key(s) lack feature vectors: {shown}{more}")
    if len(table) == 0:
        raise DataError("cannot build a design matrix from an empty table")
    rows = np.stack([np.asarray(features[r.word_key], dtype=np.float64)
                     for r in table])
    return DesignMatrix(rows, tuple(table.row_keys()))
