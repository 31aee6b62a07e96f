"""Chip-level and sample-level signal containers.

ChipSequence is the pre-backscatter two-level baseband description;
SampleWaveform is complex baseband at a declared sample rate, the unit passed
through channels and receivers. Both are shared by the line-code and modem
modules (re-exported there).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import NonIntegerOversampling

HIGH = 1
LOW = 0


@dataclass(frozen=True)
class ChipSequence:
    """High/low level sequence with per-chip durations in seconds.

    ``stretch`` is a device-clock scale factor applied to every duration at
    sampling time (1.0 nominal; set by the SFO model). ``chips_per_bit`` is an
    int for the uniform codes and a per-bit array for PIE.
    """

    levels: np.ndarray
    durations: np.ndarray
    chips_per_bit: object = None
    stretch: float = 1.0

    def __post_init__(self):
        levels = np.ascontiguousarray(self.levels, dtype=np.uint8)
        if levels.ndim != 1 or levels.size == 0:
            raise ValueError("ChipSequence needs a non-empty level sequence")
        durations = np.broadcast_to(
            np.asarray(self.durations, dtype=np.float64), levels.shape
        ).copy()
        if np.any(durations <= 0):
            raise ValueError("chip durations must be positive")
        object.__setattr__(self, "levels", levels)
        object.__setattr__(self, "durations", durations)

    def __len__(self) -> int:
        return int(self.levels.size)

    @property
    def total_duration(self) -> float:
        return float(self.durations.sum() * self.stretch)

    def bipolar(self) -> np.ndarray:
        """Levels as +1 (High) / -1 (Low) floats."""
        return 2.0 * self.levels.astype(np.float64) - 1.0

    def with_stretch(self, factor: float) -> "ChipSequence":
        return ChipSequence(self.levels, self.durations, self.chips_per_bit,
                            self.stretch * factor)


@dataclass(frozen=True)
class SampleWaveform:
    """Complex baseband samples at a declared sample rate."""

    samples: np.ndarray
    sample_rate: float
    center_offset: float = 0.0

    def __post_init__(self):
        samples = np.ascontiguousarray(self.samples)
        if samples.dtype not in (np.complex64, np.complex128):
            samples = samples.astype(np.complex128)
        if samples.ndim != 1:
            raise ValueError("SampleWaveform needs a 1-D sample array")
        if self.sample_rate <= 0:
            raise ValueError("sample rate must be positive")
        object.__setattr__(self, "samples", samples)

    def __len__(self) -> int:
        return int(self.samples.size)

    def mean_power(self) -> float:
        return float(np.mean(np.abs(self.samples) ** 2))


def check_integer_oversampling(chips: ChipSequence, sample_rate: float):
    """Nominal (un-stretched) chip durations must be whole numbers of samples."""
    counts = chips.durations * sample_rate
    if not np.allclose(counts, np.round(counts), atol=1e-6):
        raise NonIntegerOversampling(
            f"sample rate {sample_rate} is not an integer multiple of the chip rate(s)"
        )


def chip_sample_boundaries(chips: ChipSequence, sample_rate: float) -> np.ndarray:
    """Cumulative chip edges in samples, nearest-sample rounded (handles stretch)."""
    edges = np.concatenate([[0.0], np.cumsum(chips.durations * chips.stretch)])
    return np.round(edges * sample_rate).astype(np.int64)


def expand_levels(chips: ChipSequence, sample_rate: float) -> np.ndarray:
    """Per-sample level array (uint8) for the chip sequence."""
    edges = chip_sample_boundaries(chips, sample_rate)
    counts = np.diff(edges)
    if np.any(counts <= 0):
        raise NonIntegerOversampling("sample rate too low: a chip collapsed to zero samples")
    return np.repeat(chips.levels, counts)
