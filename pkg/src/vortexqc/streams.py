"""Seeded randomness and protocol traces."""

from __future__ import annotations

import zlib
from dataclasses import dataclass, field

import numpy as np

SEED_MAX = 2**64 - 1


def _word(label) -> int:
    if isinstance(label, (int, np.integer)):
        if label < 0:
            raise ValueError("stream labels must be non-negative")
        return int(label)
    return zlib.crc32(str(label).encode())


def stream(seed: int, *labels) -> np.random.Generator:
    """Counter-based (Philox) stream keyed by a 64-bit master seed and labels.

    ``stream(seed, "eg", 17)`` is the stream of trial 17 of the EG sampler;
    the same arguments always give the same draws.
    """
    if not 0 <= seed <= SEED_MAX:
        raise ValueError(f"seed must be a 64-bit unsigned integer, got {seed}")
    words = [seed & 0xFFFFFFFF, seed >> 32] + [_word(x) for x in labels]
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(words)))


@dataclass(frozen=True)
class Step:
    kind: str
    detail: str
    prob: float | None = None


@dataclass
class ProtocolTrace:
    steps: list[Step] = field(default_factory=list)
    success: bool = True
    final: object = None

    def gate(self, detail: str) -> None:
        self.steps.append(Step("gate", detail))

    def measure(self, detail: str, prob: float) -> None:
        if not 0 < prob <= 1:
            raise ValueError(f"branch probability {prob} outside (0, 1]")
        self.steps.append(Step("measure", detail, prob))

    def correct(self, detail: str) -> None:
        self.steps.append(Step("correct", detail))

    @property
    def path_probability(self) -> float:
        p = 1.0
        for s in self.steps:
            if s.prob is not None:
                p *= s.prob
        return p

    def export(self) -> str:
        lines = []
        for k, s in enumerate(self.steps, 1):
            prob = "-" if s.prob is None else f"{s.prob:.15g}"
            lines.append(f"step={k} kind={s.kind} detail={s.detail.replace(' ', '_')} prob={prob}")
        return "\n".join(lines) + "\n"
