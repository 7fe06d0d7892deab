"""Comparison estimators: naive quantization and the truncated sample mean."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ProtocolViolation
from .protocol import Transcript


@dataclass(frozen=True)
class QuantizerSpec:
    """Uniform b-bit quantizer of [0, 1] (cells of width 2^-b)."""

    bits_per_machine: int

    def __post_init__(self):
        if not 1 <= self.bits_per_machine <= 48:
            raise ValueError("bits_per_machine must be in [1, 48]")


def quantize_index(spec: QuantizerSpec, x: float) -> int:
    b = spec.bits_per_machine
    q = min(max(x, 0.0), 1.0)
    return min(int(math.floor(math.ldexp(q, b))), (1 << b) - 1)


def quantize_encode(spec: QuantizerSpec, x: float, machine: int = 1) -> Transcript:
    """Clamp to [0, 1], round down to the cell index, send it MSB-first."""
    b = spec.bits_per_machine
    idx = quantize_index(spec, x)
    bits = tuple((idx >> (b - 1 - j)) & 1 for j in range(b))
    return Transcript(machine_index=machine, bits=bits)


def quantize_decode(transcripts, reconstruction: str = "midpoint") -> float:
    """Average the per-machine cell reconstructions.

    Midpoint reconstruction minimizes within-cell squared error;
    ``reconstruction="left"`` is available for sensitivity checks.
    """
    transcripts = list(transcripts)
    if not transcripts:
        raise ValueError("no transcripts")
    b = len(transcripts[0].bits)
    offset = {"midpoint": 0.5, "left": 0.0}[reconstruction]
    total = 0.0
    for t in transcripts:
        if len(t.bits) != b:
            raise ProtocolViolation("mixed transcript lengths in quantize_decode")
        idx = 0
        for bit in t.bits:
            idx = (idx << 1) | bit
        total += math.ldexp(idx + offset, -b)
    return total / len(transcripts)


def sample_mean(xs) -> float:
    """Arithmetic mean truncated to [0, 1]."""
    xs = list(xs)
    if not xs:
        raise ValueError("sample mean of an empty list")
    return min(max(sum(xs) / len(xs), 0.0), 1.0)


def quantize_indices_vec(b: int, x: np.ndarray) -> np.ndarray:
    """Vectorized cell indices for samples of any shape."""
    q = np.clip(x, 0.0, 1.0)
    np.ldexp(q, b, out=q)
    np.floor(q, out=q)
    np.minimum(q, float((1 << b) - 1), out=q)
    return q


def quantize_estimate_vec(b: int, x: np.ndarray, reconstruction: str = "midpoint") -> np.ndarray:
    """Mean of cell reconstructions along axis 1 (machines)."""
    offset = {"midpoint": 0.5, "left": 0.0}[reconstruction]
    q = quantize_indices_vec(b, x)
    q += offset
    np.ldexp(q, -b, out=q)
    return q.mean(axis=1)


def sample_mean_vec(x: np.ndarray) -> np.ndarray:
    """Truncated mean along axis 1 (machines)."""
    return np.clip(x.mean(axis=1), 0.0, 1.0)
