"""D2R square-wave baseband modulation and backscatter mapping.

Square waves carry OOK/BPSK/QPSK/MSK at baseband under the backscatter
switching: OOK is presence/absence of the wave, PSK sets the initial phase
(time shift), MSK switches between f and 1.5f with level continuity. High/low
levels then map to ASK or PSK backscatter coefficients. FDMA places user k at
an even multiple 2^(k-1) of the first user's frequency so the odd-harmonic
grids never collide.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import (
    NonIntegerCyclesPerBit,
    NonIntegerOversampling,
    OddBitCountForQpsk,
    UnsupportedKind,
)
from .bits import BitBlock
from .signals import (
    HIGH,
    LOW,
    ChipSequence,
    SampleWaveform,
    check_integer_oversampling,
    expand_levels,
)

MSK_HIGH_FACTOR = 1.5


class SquareWaveKind(Enum):
    OOK = "square_ook"
    BPSK = "square_bpsk"
    QPSK = "square_qpsk"
    MSK = "square_msk"


@dataclass(frozen=True)
class SquareWaveScheme:
    kind: SquareWaveKind
    f_shift: float       # Hz, fundamental square-wave frequency
    bit_rate: float      # bits/s
    msk_high_factor: float = MSK_HIGH_FACTOR

    def __post_init__(self):
        if self.f_shift <= 0 or self.bit_rate <= 0:
            raise ValueError("f_shift and bit_rate must be positive")
        if self.msk_high_factor != MSK_HIGH_FACTOR:
            raise ValueError("the MSK high frequency is fixed at 1.5x f_shift")
        cyc = self.f_shift / self.bit_rate
        if self.kind is SquareWaveKind.MSK:
            # both frequencies need whole chips per bit (chip = half period)
            for f in (self.f_shift, self.msk_high_factor * self.f_shift):
                chips = 2.0 * f / self.bit_rate
                if abs(chips - round(chips)) > 1e-9:
                    raise NonIntegerCyclesPerBit(
                        f"{f} Hz gives {chips} chips per bit; need an integer"
                    )
        else:
            if abs(cyc - round(cyc)) > 1e-9 or round(cyc) < 1:
                raise NonIntegerCyclesPerBit(
                    f"f_shift/bit_rate = {cyc} must be a positive integer"
                )

    @property
    def cycles_per_bit(self) -> int:
        return int(round(self.f_shift / self.bit_rate))


class BackscatterKind(Enum):
    ASK = "ask"
    PSK = "psk"


@dataclass(frozen=True)
class BackscatterMap:
    kind: BackscatterKind
    high_coeff: complex = None
    low_coeff: complex = None

    def __post_init__(self):
        high = self.high_coeff
        low = self.low_coeff
        if high is None:
            high = 1 + 0j
        if low is None:
            low = 0j if self.kind is BackscatterKind.ASK else -1 + 0j
        if abs(high) > 1 + 1e-12 or abs(low) > 1 + 1e-12:
            raise ValueError("passive reflection: |coefficient| <= 1")
        object.__setattr__(self, "high_coeff", complex(high))
        object.__setattr__(self, "low_coeff", complex(low))


def default_map_for(scheme: SquareWaveScheme, kind: BackscatterKind) -> BackscatterMap:
    """Backscatter map for a scheme; square-OOK requires the ASK map."""
    if scheme.kind is SquareWaveKind.OOK and kind is not BackscatterKind.ASK:
        raise UnsupportedKind("square-OOK requires ASK backscatter mapping")
    return BackscatterMap(kind)


@dataclass(frozen=True)
class SfoModel:
    """Per-transmission relative clock error, uniform in +/- sfo_ppm * 1e-6."""

    sfo_ppm: float

    def draw(self, rng: np.random.Generator) -> float:
        bound = self.sfo_ppm * 1e-6
        return float(rng.uniform(-bound, bound))


def _square_chips(cycles: int, invert: bool) -> np.ndarray:
    """One bit of square wave, 2 chips per cycle; invert flips the phase by pi."""
    pattern = np.tile([HIGH, LOW], cycles)
    return (pattern ^ 1).astype(np.uint8) if invert else pattern.astype(np.uint8)


_QPSK_SHIFTS = {(0, 0): 0, (0, 1): 1, (1, 0): 2, (1, 1): 3}  # quarter periods


def square_modulate(bits, scheme: SquareWaveScheme) -> ChipSequence:
    """Map bits to the two-level square baseband per the scheme."""
    b = bits.bits if isinstance(bits, BitBlock) else np.ascontiguousarray(bits, dtype=np.uint8)
    cyc = scheme.cycles_per_bit
    bit_dur = 1.0 / scheme.bit_rate

    if scheme.kind is SquareWaveKind.OOK:
        chip_dur = bit_dur / (2 * cyc)
        rows = [(_square_chips(cyc, False) if bit else np.zeros(2 * cyc, dtype=np.uint8))
                for bit in b]
        return ChipSequence(np.concatenate(rows), chip_dur, 2 * cyc)

    if scheme.kind is SquareWaveKind.BPSK:
        chip_dur = bit_dur / (2 * cyc)
        base = _square_chips(cyc, False)
        chips = np.where(b[:, None] == 0, base[None, :], base[None, :] ^ 1)
        return ChipSequence(chips.reshape(-1).astype(np.uint8), chip_dur, 2 * cyc)

    if scheme.kind is SquareWaveKind.QPSK:
        if b.size % 2:
            raise OddBitCountForQpsk(f"{b.size} bits cannot form QPSK pairs")
        # quarter-period phase steps need 4 chips per cycle
        chip_dur = bit_dur / (4 * cyc)
        base = np.tile([HIGH, HIGH, LOW, LOW], 2 * cyc)  # one symbol = 2 bit durations
        rows = []
        for i in range(0, b.size, 2):
            shift = _QPSK_SHIFTS[(int(b[i]), int(b[i + 1]))]
            rows.append(np.roll(base, shift))
        return ChipSequence(np.concatenate(rows).astype(np.uint8), chip_dur, 4 * cyc)

    if scheme.kind is SquareWaveKind.MSK:
        chips_low = int(round(2 * scheme.f_shift / scheme.bit_rate))
        chips_high = int(round(2 * scheme.msk_high_factor * scheme.f_shift / scheme.bit_rate))
        dur_low = bit_dur / chips_low
        dur_high = bit_dur / chips_high
        levels = []
        durs = []
        level = HIGH  # alternation continues across bit boundaries
        for bit in b:
            n = chips_high if bit else chips_low
            d = dur_high if bit else dur_low
            for _ in range(n):
                levels.append(level)
                level ^= 1
            durs.extend([d] * n)
        return ChipSequence(np.array(levels, dtype=np.uint8), np.array(durs), None)

    raise UnsupportedKind(str(scheme.kind))


def backscatter_apply(chips: ChipSequence, bmap: BackscatterMap,
                      sample_rate: float) -> SampleWaveform:
    """Expand chips to the backscatter coefficient sample stream."""
    check_integer_oversampling(chips, sample_rate)
    lv = expand_levels(chips, sample_rate)
    coeffs = np.where(lv == HIGH, bmap.high_coeff, bmap.low_coeff)
    return SampleWaveform(coeffs, sample_rate)


def apply_sfo(obj, sfo: SfoModel, rng: np.random.Generator):
    """Stretch a device-generated signal by its clock error.

    Returns (stretched object, epsilon). The fundamental moves to
    f_shift * (1 + eps), i.e. durations scale by 1/(1 + eps). ChipSequence
    input stays exact (durations rescaled); SampleWaveform input is
    nearest-neighbor resampled, which keeps two-level amplitudes intact.
    """
    eps = sfo.draw(rng)
    if eps == 0.0:
        return obj, 0.0
    if isinstance(obj, ChipSequence):
        return obj.with_stretch(1.0 / (1.0 + eps)), eps
    if isinstance(obj, SampleWaveform):
        n_out = int(round(len(obj) / (1.0 + eps)))
        idx = np.minimum((np.arange(n_out) * (1.0 + eps)).round().astype(np.int64),
                         len(obj) - 1)
        return SampleWaveform(obj.samples[idx], obj.sample_rate, obj.center_offset), eps
    raise TypeError(f"apply_sfo expects ChipSequence or SampleWaveform, got {type(obj)}")


def fdma_plan(n_users: int, f1: float) -> list:
    """User k gets f1 * 2^(k-1): even multiples keep odd-harmonic grids disjoint."""
    if n_users < 1:
        raise ValueError("need at least one user")
    return [f1 * (2 ** k) for k in range(n_users)]


def default_sample_rate(f_max: float, chip_rates=(), min_samples_per_period: int = 16) -> float:
    """Smallest rate >= min_samples_per_period * f_max that is a multiple of all chip rates.

    Keeps at least the 7th harmonic of the fastest user below Nyquist (16f > 14f).
    """
    target = min_samples_per_period * f_max
    if not chip_rates:
        return target
    base = float(chip_rates[0])
    for r in chip_rates[1:]:
        base = np.lcm(int(round(base)), int(round(r)))
    k = int(np.ceil(target / base))
    return float(k * base)
