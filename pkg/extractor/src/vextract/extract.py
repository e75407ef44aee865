"""Final-layer vector extraction from trained or seed-initialized models."""

from __future__ import annotations

from typing import List, Optional, Sequence

import numpy as np

from .bundle import BundleMeta, BundleToken, write_bundle
from .catalog import Architecture, find_architecture
from .corpus import CorpusWord, align_offsets, build_documents
from .errors import CorpusError, ModelError

TOKENIZER_VOCAB_SIZE = 2048


def train_tokenizer(doc_texts: Sequence[str]):
    """Byte-level BPE trained on the corpus itself: deterministic, needs no
    downloaded vocabulary, and yields character offsets for alignment."""
    from tokenizers import ByteLevelBPETokenizer

    tokenizer = ByteLevelBPETokenizer()
    tokenizer.train_from_iterator(doc_texts, vocab_size=TOKENIZER_VOCAB_SIZE,
                                  min_frequency=1, show_progress=False)
    return tokenizer


def load_model(arch: Architecture, step: int, untrained_seed: Optional[int],
               vocab_size: int):
    import torch
    from transformers import GPTNeoXConfig, GPTNeoXModel

    if step == 0:
        if untrained_seed is None:
            raise ModelError("step 0 requires --untrained-seed")
        config = GPTNeoXConfig(
            vocab_size=vocab_size,
            hidden_size=arch.d_model,
            num_hidden_layers=arch.n_layers,
            num_attention_heads=arch.n_heads,
            intermediate_size=4 * arch.d_model,
        )
        torch.manual_seed(untrained_seed)
        model = GPTNeoXModel(config)
    else:
        from transformers import AutoModel

        try:
            model = AutoModel.from_pretrained(arch.hub_id,
                                              revision=f"step{step}")
        except Exception as exc:
            raise ModelError(
                f"cannot load {arch.hub_id} at step {step}: {exc}") from exc
    if model.config.hidden_size != arch.d_model:
        raise ModelError(
            f"checkpoint hidden size {model.config.hidden_size} != "
            f"expected d_model {arch.d_model} for {arch.name}")
    model.eval()
    return model


def _final_layer_vectors(model, token_ids: List[int]) -> np.ndarray:
    import torch

    window = int(model.config.max_position_embeddings)
    chunks = []
    with torch.no_grad():
        for start in range(0, len(token_ids), window):
            ids = torch.tensor([token_ids[start:start + window]],
                               dtype=torch.long)
            hidden = model(input_ids=ids).last_hidden_state
            chunks.append(hidden[0].to(torch.float32).numpy())
    return np.concatenate(chunks, axis=0)


def extract(model_name: str, step: int, words: Sequence[CorpusWord],
            out_path: str, untrained_seed: Optional[int] = None) -> int:
    """Write one bundle with raw per-token final-layer vectors; returns the
    token count. Subword-to-word averaging is left to the consumer."""
    arch = find_architecture(model_name)
    if arch is None:
        raise ModelError(f"unknown model {model_name!r}")
    if step < 0:
        raise ModelError(f"training step must be >= 0, got {step}")
    docs = build_documents(words)
    if not docs:
        raise CorpusError("corpus has no documents")

    tokenizer = train_tokenizer([doc.text for doc in docs])
    encodings = [tokenizer.encode(doc.text) for doc in docs]
    model = load_model(arch, step, untrained_seed,
                       vocab_size=tokenizer.get_vocab_size())

    tokens: List[BundleToken] = []
    for doc, encoding in zip(docs, encodings):
        word_of_token = align_offsets(doc, encoding.offsets)
        vectors = _final_layer_vectors(model, encoding.ids)
        for position, word_pos in enumerate(word_of_token):
            word = doc.words[word_pos]
            tokens.append(BundleToken(
                doc_id=doc.doc_id,
                token_index=position,
                sentence_id=word.sentence_id,
                word_index=word.word_index,
                vector=vectors[position],
            ))
    meta = BundleMeta(
        model_name=arch.name,
        family=arch.family,
        parameter_count=arch.parameter_count,
        d_model=arch.d_model,
        training_steps=step,
        init_seed=untrained_seed if step == 0 else None,
    )
    write_bundle(out_path, meta, tokens)
    return len(tokens)
