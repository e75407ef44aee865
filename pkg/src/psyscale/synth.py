"""Synthetic corpora and feature bundles with known ground truth.

These generators anchor the desk-scale test suite: responses are a known
linear function of latent word features plus Gaussian noise, and feature
bundles are random projections of those latents mixed with independent
noise.  A zero signal leak gives pure-noise features (the untrained
analogue); a positive leak embeds recoverable signal (the trained
analogue).  Everything is a pure function of its spec and seed.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import List, Sequence, Tuple

import numpy as np

from .corpus import (
    ResponseKind,
    ResponseRecord,
    ResponseTable,
    TokenVector,
    VectorBundle,
    WordKey,
)
from .errors import ConfigError, DataError


@dataclass(frozen=True)
class SynthSpec:
    n_subjects: int = 1
    n_docs: int = 2
    sentences_per_doc: int = 50
    words_per_sentence: int = 5
    latent_dim: int = 8
    noise_sigma: float = 1.0
    feature_widths: Tuple[int, ...] = (8, 32, 128, 512)
    seed: int = 0

    def __post_init__(self):
        for name in ("n_subjects", "n_docs", "sentences_per_doc",
                     "words_per_sentence", "latent_dim"):
            if getattr(self, name) <= 0:
                raise ConfigError(f"{name} must be positive")
        if self.noise_sigma < 0:
            raise ConfigError("noise_sigma must be >= 0")
        if any(w < 1 for w in self.feature_widths):
            raise ConfigError("feature widths must be >= 1")

    @property
    def n_word_events(self) -> int:
        return self.n_docs * self.sentences_per_doc * self.words_per_sentence

    @property
    def n_rows(self) -> int:
        return self.n_subjects * self.n_word_events


@dataclass(frozen=True)
class SynthData:
    """Generated corpus: responses plus the latent truth behind them."""

    table: ResponseTable
    latents: np.ndarray              # (n_rows, k), aligned with table rows
    true_weights: np.ndarray         # (k,), unit norm
    word_keys: Tuple[WordKey, ...]   # unique word events, generation order
    word_latents: np.ndarray         # (n_word_events, k)


def gen_latent_regression(spec: SynthSpec) -> SynthData:
    """Generate responses y = latents @ w + noise, deterministically.

    Latents are standard normal per word event and shared across subjects;
    the weight vector has unit norm, so the signal variance is 1 and the
    analytic held-out correlation ceiling is 1 / sqrt(1 + noise_sigma^2).
    """
    rng = np.random.default_rng(spec.seed)
    k = spec.latent_dim
    word_latents = rng.standard_normal((spec.n_word_events, k))
    raw_w = rng.standard_normal(k)
    true_weights = raw_w / np.linalg.norm(raw_w)

    word_keys: List[WordKey] = []
    for doc in range(spec.n_docs):
        for sent in range(spec.sentences_per_doc):
            for word in range(spec.words_per_sentence):
                word_keys.append((f"doc{doc}", sent, word))

    signal = word_latents @ true_weights
    records: List[ResponseRecord] = []
    latents_rows = []
    for subj in range(spec.n_subjects):
        noise = rng.standard_normal(spec.n_word_events) * spec.noise_sigma
        y = signal + noise
        for i, (doc_id, sent, word) in enumerate(word_keys):
            records.append(ResponseRecord(
                subject_id=f"s{subj}",
                doc_id=doc_id,
                sentence_id=sent,
                word_index=word,
                word_text=f"w{i}",
                response=float(y[i]),
            ))
        latents_rows.append(word_latents)
    return SynthData(
        table=ResponseTable(records, ResponseKind.FMRI_SENTENCE),
        latents=np.vstack(latents_rows),
        true_weights=true_weights,
        word_keys=tuple(word_keys),
        word_latents=word_latents,
    )


def gen_random_feature_bundle(word_keys: Sequence[WordKey],
                              word_latents: np.ndarray,
                              width: int,
                              seed: int,
                              signal_leak: float,
                              training_steps: int = 0,
                              model_name: str = "") -> VectorBundle:
    """Random-projection features over the given word events.

    features = leak * (latents @ P) + (1 - leak) * noise, with P a fixed
    Gaussian projection scaled by 1/sqrt(k).  leak 0 is pure noise.
    """
    if width < 1:
        raise ConfigError("width must be >= 1")
    if not 0.0 <= signal_leak <= 1.0:
        raise ConfigError("signal_leak must be in [0, 1]")
    latents = np.asarray(word_latents, dtype=np.float64)
    if latents.ndim != 2 or latents.shape[0] != len(word_keys):
        raise DataError("word_latents must be (n_words, k) matching word_keys")
    k = latents.shape[1]

    rng = np.random.default_rng(seed)
    projection = rng.standard_normal((k, width)) / np.sqrt(k)
    noise = rng.standard_normal((len(word_keys), width))
    feats = signal_leak * (latents @ projection) + (1.0 - signal_leak) * noise
    feats32 = feats.astype(np.float32)

    tokens: List[TokenVector] = []
    next_index = {}
    for i, (doc_id, sent, word) in enumerate(word_keys):
        idx = next_index.get(doc_id, 0)
        next_index[doc_id] = idx + 1
        tokens.append(TokenVector(doc_id, idx, sent, word, feats32[i]))
    return VectorBundle(
        model_name=model_name or f"synth-d{width}-leak{signal_leak:g}",
        family="synth",
        parameter_count=width,
        d_model=width,
        training_steps=training_steps,
        tokens=tuple(tokens),
        init_seed=seed,
    )


def bundle_seed(base_seed: int, width: int, training_steps: int) -> int:
    """Deterministic per-bundle seed split from the synth seed."""
    ss = np.random.SeedSequence(base_seed, spawn_key=(width, training_steps))
    return int(ss.generate_state(1)[0])
