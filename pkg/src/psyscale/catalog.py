"""Metadata for the model variants whose vectors the harness consumes."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Tuple

# Pythia releases label their last checkpoint with this step count; step 0
# is the untrained initialization.
FULLY_TRAINED_STEPS = 143_000


@dataclass(frozen=True)
class ModelInfo:
    name: str
    family: str
    n_layers: int
    n_heads: int
    d_model: int
    parameter_count: int


MODEL_VARIANTS: Tuple[ModelInfo, ...] = (
    ModelInfo("gpt2-small", "gpt2", 12, 12, 768, 124_000_000),
    ModelInfo("gpt2-medium", "gpt2", 24, 16, 1024, 355_000_000),
    ModelInfo("gpt2-large", "gpt2", 36, 20, 1280, 774_000_000),
    ModelInfo("gpt2-xl", "gpt2", 48, 25, 1600, 1_600_000_000),
    ModelInfo("gpt-neo-125m", "gpt-neo", 12, 12, 768, 125_000_000),
    ModelInfo("gpt-neo-1.3b", "gpt-neo", 24, 16, 2048, 1_300_000_000),
    ModelInfo("gpt-neo-2.7b", "gpt-neo", 32, 20, 2560, 2_700_000_000),
    ModelInfo("gpt-j-6b", "gpt-neo", 28, 16, 4096, 6_000_000_000),
    ModelInfo("gpt-neox-20b", "gpt-neo", 44, 64, 6144, 20_000_000_000),
    ModelInfo("opt-125m", "opt", 12, 12, 768, 125_000_000),
    ModelInfo("opt-1.3b", "opt", 24, 32, 2048, 1_300_000_000),
    ModelInfo("opt-2.7b", "opt", 32, 32, 2560, 2_700_000_000),
    ModelInfo("opt-6.7b", "opt", 32, 32, 4096, 6_700_000_000),
    ModelInfo("opt-13b", "opt", 40, 40, 5120, 13_000_000_000),
    ModelInfo("opt-30b", "opt", 48, 56, 7168, 30_000_000_000),
    ModelInfo("opt-66b", "opt", 64, 72, 9216, 66_000_000_000),
    ModelInfo("pythia-70m", "pythia", 6, 8, 512, 70_000_000),
    ModelInfo("pythia-160m", "pythia", 12, 12, 768, 160_000_000),
    ModelInfo("pythia-410m", "pythia", 24, 16, 1024, 410_000_000),
    ModelInfo("pythia-1b", "pythia", 16, 8, 2048, 1_000_000_000),
    ModelInfo("pythia-1.4b", "pythia", 24, 16, 2048, 1_400_000_000),
    ModelInfo("pythia-2.8b", "pythia", 32, 32, 2560, 2_800_000_000),
    ModelInfo("pythia-6.9b", "pythia", 32, 32, 4096, 6_900_000_000),
    ModelInfo("pythia-12b", "pythia", 36, 40, 5120, 12_000_000_000),
)


def find_model(name: str) -> Optional[ModelInfo]:
    for info in MODEL_VARIANTS:
        if info.name == name:
            return info
    return None
