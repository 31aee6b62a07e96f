"""Bit and LLR containers shared across the codec and modem modules."""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

import numpy as np


class BitRole(Enum):
    MESSAGE = "message"
    MESSAGE_WITH_CRC = "message_with_crc"
    CODED = "coded"


@dataclass(frozen=True)
class BitBlock:
    """Ordered binary sequence with a declared role in the coding chain.

    Roles only advance via crc_attach (MESSAGE -> MESSAGE_WITH_CRC) and the
    convolutional encoders (-> CODED).
    """

    bits: np.ndarray
    role: BitRole = BitRole.MESSAGE

    def __post_init__(self):
        arr = np.ascontiguousarray(self.bits, dtype=np.uint8)
        if arr.ndim != 1 or arr.size == 0:
            raise ValueError("BitBlock needs a non-empty 1-D bit sequence")
        if np.any(arr > 1):
            raise ValueError("bits must be 0/1")
        object.__setattr__(self, "bits", arr)

    def __len__(self) -> int:
        return int(self.bits.size)

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, BitBlock)
            and self.role is other.role
            and self.bits.shape == other.bits.shape
            and bool(np.all(self.bits == other.bits))
        )


@dataclass(frozen=True)
class LlrBlock:
    """Per-coded-bit log-likelihood ratios.

    Sign convention: positive LLR means bit 0 is more likely. ``scale`` records
    the noise-variance normalization the values were computed with.
    """

    llrs: np.ndarray
    scale: float = 1.0

    def __post_init__(self):
        arr = np.ascontiguousarray(self.llrs, dtype=np.float64)
        if arr.ndim != 1 or arr.size == 0:
            raise ValueError("LlrBlock needs a non-empty 1-D sequence")
        if not np.all(np.isfinite(arr)):
            raise ValueError("LLRs must be finite")
        object.__setattr__(self, "llrs", arr)

    def __len__(self) -> int:
        return int(self.llrs.size)

    def hard_bits(self) -> np.ndarray:
        """Sign decisions (positive -> 0)."""
        return (self.llrs < 0).astype(np.uint8)


def random_bits(n: int, rng: np.random.Generator) -> BitBlock:
    return BitBlock(rng.integers(0, 2, size=n, dtype=np.uint8))
