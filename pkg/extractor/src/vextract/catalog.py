"""Architectures the extractor can instantiate or download."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Tuple

FULLY_TRAINED_STEPS = 143_000


@dataclass(frozen=True)
class Architecture:
    name: str
    family: str
    hub_id: str
    n_layers: int
    n_heads: int
    d_model: int
    parameter_count: int


# Checkpoint grids with a step-0 (untrained) release; other families only
# publish final weights, so seed-init mode is restricted to this list.
ARCHITECTURES: Tuple[Architecture, ...] = (
    Architecture("pythia-70m", "pythia", "EleutherAI/pythia-70m",
                 6, 8, 512, 70_000_000),
    Architecture("pythia-160m", "pythia", "EleutherAI/pythia-160m",
                 12, 12, 768, 160_000_000),
    Architecture("pythia-410m", "pythia", "EleutherAI/pythia-410m",
                 24, 16, 1024, 410_000_000),
    Architecture("pythia-1b", "pythia", "EleutherAI/pythia-1b",
                 16, 8, 2048, 1_000_000_000),
    Architecture("pythia-1.4b", "pythia", "EleutherAI/pythia-1.4b",
                 24, 16, 2048, 1_400_000_000),
    Architecture("pythia-2.8b", "pythia", "EleutherAI/pythia-2.8b",
                 32, 32, 2560, 2_800_000_000),
    Architecture("pythia-6.9b", "pythia", "EleutherAI/pythia-6.9b",
                 32, 32, 4096, 6_900_000_000),
    Architecture("pythia-12b", "pythia", "EleutherAI/pythia-12b",
                 36, 40, 5120, 12_000_000_000),
)


def find_architecture(name: str) -> Optional[Architecture]:
    for arch in ARCHITECTURES:
        if arch.name == name:
            return arch
    return None
