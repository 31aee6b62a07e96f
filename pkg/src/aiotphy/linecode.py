"""RFID-heritage line codes and their soft/non-coherent decoders.

Encoders: PIE, Manchester, enhanced Manchester, FM0, Miller-modulated
subcarrier (MMS). Decoding: max-log forward-backward over the small
state-transition trellises (soft LLRs for CC decoding), and channel-estimate-
free differential correlation (hard bits). Conventions: High = 1 = +1
bipolar; Manchester bit 0 is [High, Low] (mid-bit falling edge); FM0 default
initial level High.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .bits import BitBlock, LlrBlock
from .errors import InvalidM, LengthMismatch, UnsupportedKind
from .signals import HIGH, LOW, ChipSequence, SampleWaveform


class LineCode(Enum):
    PIE = "pie"
    MANCHESTER = "manchester"
    ENHANCED_MANCHESTER = "enh_manchester"
    FM0 = "fm0"
    MMS = "mms"


@dataclass(frozen=True)
class LineCodeKind:
    kind: LineCode
    subcarrier_cycles: int = 0  # M, for MMS / enhanced Manchester

    def __post_init__(self):
        if self.kind is LineCode.MMS and self.subcarrier_cycles not in (2, 4, 8):
            raise InvalidM(f"MMS subcarrier cycles must be 2/4/8, got {self.subcarrier_cycles}")
        if self.kind is LineCode.ENHANCED_MANCHESTER and self.subcarrier_cycles < 1:
            raise InvalidM("enhanced Manchester needs subcarrier_cycles >= 1")


def _bit_array(bits) -> np.ndarray:
    if isinstance(bits, BitBlock):
        return bits.bits
    return np.ascontiguousarray(bits, dtype=np.uint8)


def pie_encode(bits, tari: float = 1.0) -> ChipSequence:
    """Pulse Interval Encoding: bit 0 -> High,Low (1 Tari), bit 1 -> 3x High,Low (2 Tari).

    Chips are uniform Tari/2 units so unequal bit durations come from unequal
    chip counts (2 vs 4 per bit).
    """
    b = _bit_array(bits)
    unit = tari / 2.0
    levels = []
    cpb = np.where(b == 0, 2, 4)
    for bit in b:
        levels.extend([HIGH, LOW] if bit == 0 else [HIGH, HIGH, HIGH, LOW])
    return ChipSequence(np.array(levels, dtype=np.uint8), unit, cpb)


def manchester_encode(bits, bit_rate: float = 1.0) -> ChipSequence:
    """Bit 0 -> [High, Low], bit 1 -> [Low, High]; one mid-bit transition per bit."""
    b = _bit_array(bits)
    chips = np.empty((b.size, 2), dtype=np.uint8)
    chips[:, 0] = 1 - b
    chips[:, 1] = b
    return ChipSequence(chips.reshape(-1), 1.0 / (2.0 * bit_rate), 2)


def fm0_encode(bits, initial_level: int = HIGH, bit_rate: float = 1.0) -> ChipSequence:
    """Bi-phase space: level inverts at every bit boundary; bit 0 also inverts mid-bit.

    The boundary inversion applies before the first bit, so the first chip is
    the inverse of ``initial_level``.
    """
    b = _bit_array(bits)
    chips = np.empty(2 * b.size, dtype=np.uint8)
    level = initial_level
    for i, bit in enumerate(b):
        level ^= 1  # boundary inversion
        chips[2 * i] = level
        if bit == 0:
            level ^= 1  # mid-bit inversion
        chips[2 * i + 1] = level
    return ChipSequence(chips, 1.0 / (2.0 * bit_rate), 2)


def miller_baseband(bits) -> np.ndarray:
    """Per-half-bit bipolar Miller levels (2 per bit), starting High.

    Bit 1 inverts mid-bit; the boundary between two consecutive 0 bits
    inverts; no other boundary inversion.
    """
    b = _bit_array(bits)
    halves = np.empty(2 * b.size, dtype=np.float64)
    level = 1.0
    for i, bit in enumerate(b):
        if i > 0 and bit == 0 and b[i - 1] == 0:
            level = -level
        halves[2 * i] = level
        if bit == 1:
            level = -level
        halves[2 * i + 1] = level
    return halves


def _subcarrier_chips(m_cycles: int) -> np.ndarray:
    """One bit of the square subcarrier, 2 chips per cycle, bipolar."""
    return np.tile([1.0, -1.0], m_cycles)


def mms_encode(bits, m_cycles: int, bit_rate: float = 1.0) -> ChipSequence:
    """Miller baseband multiplied chip-wise by an M-cycle-per-bit square wave."""
    if m_cycles not in (2, 4, 8):
        raise InvalidM(f"MMS cycles per bit must be 2/4/8, got {m_cycles}")
    halves = miller_baseband(bits)
    baseband = np.repeat(halves, m_cycles)  # M chips per half-bit
    product = baseband * np.tile(_subcarrier_chips(m_cycles), halves.size // 2)
    levels = (product > 0).astype(np.uint8)
    return ChipSequence(levels, 1.0 / (2.0 * m_cycles * bit_rate), 2 * m_cycles)


def enhanced_manchester_encode(bits, m_cycles: int, bit_rate: float = 1.0) -> ChipSequence:
    """Manchester generalized to M subcarrier cycles per bit.

    Each bit is an M-cycle square burst whose polarity is the NRZ bit value
    (bit 0 -> starts High, bit 1 -> inverted). M = 1 reduces to classic
    Manchester; for M = cycles-per-bit this is chip-identical to square-wave
    BPSK, which is the point of the code.
    """
    if m_cycles < 1:
        raise InvalidM("enhanced Manchester needs at least 1 cycle per bit")
    b = _bit_array(bits)
    nrz = 1.0 - 2.0 * b.astype(np.float64)
    product = nrz[:, None] * _subcarrier_chips(m_cycles)[None, :]
    levels = (product > 0).astype(np.uint8).reshape(-1)
    return ChipSequence(levels, 1.0 / (2.0 * m_cycles * bit_rate), 2 * m_cycles)


def encode(bits, kind: LineCodeKind, bit_rate: float = 1.0, **kw) -> ChipSequence:
    if kind.kind is LineCode.PIE:
        return pie_encode(bits, **kw)
    if kind.kind is LineCode.MANCHESTER:
        return manchester_encode(bits, bit_rate)
    if kind.kind is LineCode.FM0:
        return fm0_encode(bits, kw.get("initial_level", HIGH), bit_rate)
    if kind.kind is LineCode.MMS:
        return mms_encode(bits, kind.subcarrier_cycles, bit_rate)
    if kind.kind is LineCode.ENHANCED_MANCHESTER:
        return enhanced_manchester_encode(bits, kind.subcarrier_cycles, bit_rate)
    raise UnsupportedKind(str(kind.kind))


# --- trellis definitions ------------------------------------------------
#
# A line-code trellis has a small state set and, per (state, bit), the bipolar
# polarities of the two half-bit waveforms plus the successor state. Branch
# metrics come from per-half-bit matched-filter metrics m[j, polarity].

class _LineTrellis:
    def __init__(self, n_states, next_state, half_pols):
        self.n_states = n_states
        self.next_state = np.asarray(next_state, dtype=np.int64)      # (S, 2)
        self.half_pols = np.asarray(half_pols, dtype=np.float64)      # (S, 2, 2)


def _fm0_trellis() -> _LineTrellis:
    # state: level entering the boundary (0 -> High, 1 -> Low)
    nxt = np.zeros((2, 2), dtype=np.int64)
    pols = np.zeros((2, 2, 2))
    for s, lvl in ((0, 1.0), (1, -1.0)):
        for b in (0, 1):
            h1 = -lvl
            h2 = h1 if b == 1 else -h1
            pols[s, b] = (h1, h2)
            nxt[s, b] = 0 if h2 > 0 else 1
    return _LineTrellis(2, nxt, pols)


def _mms_trellis() -> _LineTrellis:
    # state: (previous bit, level of last half) -> index 2*prev + (0 if High else 1)
    nxt = np.zeros((4, 2), dtype=np.int64)
    pols = np.zeros((4, 2, 2))
    for prev in (0, 1):
        for lvl_i, lvl in ((0, 1.0), (1, -1.0)):
            s = 2 * prev + lvl_i
            for b in (0, 1):
                a = -lvl if (prev == 0 and b == 0) else lvl
                h1 = a
                h2 = a if b == 0 else -a
                pols[s, b] = (h1, h2)
                nxt[s, b] = 2 * b + (0 if h2 > 0 else 1)
    return _LineTrellis(4, nxt, pols)


def _manchester_trellis() -> _LineTrellis:
    # memoryless: single state; bit 0 halves (+, -), bit 1 halves (-, +)
    return _LineTrellis(1, [[0, 0]], [[[1.0, -1.0], [-1.0, 1.0]]])


def _enh_manchester_trellis() -> _LineTrellis:
    # NRZ polarity on the subcarrier: both halves share the bit's sign
    return _LineTrellis(1, [[0, 0]], [[[1.0, 1.0], [-1.0, -1.0]]])


def trellis_for(kind: LineCodeKind) -> _LineTrellis:
    if kind.kind is LineCode.FM0:
        return _fm0_trellis()
    if kind.kind is LineCode.MMS:
        return _mms_trellis()
    if kind.kind is LineCode.MANCHESTER:
        return _manchester_trellis()
    if kind.kind is LineCode.ENHANCED_MANCHESTER:
        return _enh_manchester_trellis()
    raise UnsupportedKind(f"no soft trellis for {kind.kind}")


def _branch_metrics(half_metrics: np.ndarray, tr: _LineTrellis) -> np.ndarray:
    """(B, N, S, 2) branch metrics from (B, 2N, 2) half-bit metrics."""
    B, twoN, _ = half_metrics.shape
    N = twoN // 2
    m1 = half_metrics[:, 0::2, :]  # (B, N, 2) columns [pol +1, pol -1]
    m2 = half_metrics[:, 1::2, :]
    idx1 = (tr.half_pols[:, :, 0] < 0).astype(np.int64)  # (S, 2)
    idx2 = (tr.half_pols[:, :, 1] < 0).astype(np.int64)
    return m1[:, :, idx1] + m2[:, :, idx2]  # (B, N, S, 2)


def maxlog_bcjr_batch(branch_metrics: np.ndarray, next_state: np.ndarray) -> np.ndarray:
    """Max-log forward-backward over a small trellis; (B, N) bit LLRs.

    ``branch_metrics`` is (B, N, S, 2) with the log-metric of taking bit b out
    of state s at step i; ``next_state`` is (S, 2). Initial and final state
    priors are uniform. Positive output LLR means bit 0.
    """
    bm = branch_metrics
    B, N, S, _ = bm.shape
    nxt = np.asarray(next_state, dtype=np.int64)

    alpha = np.zeros((N + 1, B, S))
    for i in range(N):
        step = np.full((B, S), -np.inf)
        for s in range(S):
            for b in (0, 1):
                s2 = nxt[s, b]
                cand = alpha[i, :, s] + bm[:, i, s, b]
                np.maximum(step[:, s2], cand, out=step[:, s2])
        alpha[i + 1] = step

    beta = np.zeros((N + 1, B, S))
    for i in range(N - 1, -1, -1):
        step = np.full((B, S), -np.inf)
        for s in range(S):
            for b in (0, 1):
                s2 = nxt[s, b]
                cand = beta[i + 1, :, s2] + bm[:, i, s, b]
                np.maximum(step[:, s], cand, out=step[:, s])
        beta[i] = step

    llrs = np.empty((B, N))
    for i in range(N):
        best = np.full((B, 2), -np.inf)
        for s in range(S):
            for b in (0, 1):
                s2 = nxt[s, b]
                cand = alpha[i, :, s] + bm[:, i, s, b] + beta[i + 1, :, s2]
                np.maximum(best[:, b], cand, out=best[:, b])
        llrs[:, i] = best[:, 0] - best[:, 1]
    return llrs


def soft_decode_batch(half_metrics: np.ndarray, kind: LineCodeKind) -> np.ndarray:
    """Per-bit LLRs from per-half-bit matched-filter metrics.

    ``half_metrics`` is (B, 2N, 2): log-metrics for each half-bit under the
    +1 and -1 polarity hypotheses.
    """
    tr = trellis_for(kind)
    if half_metrics.ndim != 3 or half_metrics.shape[1] % 2 or half_metrics.shape[2] != 2:
        raise LengthMismatch("half-bit metrics must be (B, 2N, 2)")
    bm = _branch_metrics(half_metrics, tr)  # (B, N, S, 2)
    return maxlog_bcjr_batch(bm, tr.next_state)


def linecode_soft_decode(bit_metrics: np.ndarray, kind: LineCodeKind) -> LlrBlock:
    """Single-block wrapper over soft_decode_batch; metrics are (2N, 2)."""
    metrics = np.ascontiguousarray(bit_metrics, dtype=np.float64)
    if metrics.ndim != 2:
        raise LengthMismatch("expected (2N, 2) half-bit metrics")
    llrs = soft_decode_batch(metrics[None], kind)[0]
    return LlrBlock(llrs)


# --- non-coherent correlation detection ---------------------------------

def half_bit_templates(kind: LineCodeKind, width: int) -> np.ndarray:
    """Unit half-bit waveform (the +1-polarity hypothesis) at `width` samples."""
    if kind.kind in (LineCode.FM0, LineCode.MANCHESTER):
        return np.ones(width)
    if kind.kind in (LineCode.MMS, LineCode.ENHANCED_MANCHESTER):
        m = kind.subcarrier_cycles
        chips = m  # chips per half-bit
        if width % chips:
            raise LengthMismatch(f"half-bit width {width} not divisible into {chips} chips")
        return np.repeat(_subcarrier_chips(m)[:chips], width // chips)
    raise UnsupportedKind(f"no correlation template for {kind.kind}")


def half_bit_correlations(samples: np.ndarray, edges: np.ndarray,
                          kind: LineCodeKind) -> np.ndarray:
    """Complex correlation of each half-bit window against the unit template."""
    n_half = edges.size - 1
    widths = np.diff(edges)
    if np.all(widths == widths[0]):
        w = int(widths[0])
        seg = samples[edges[0]:edges[-1]].reshape(n_half, w)
        return seg @ half_bit_templates(kind, w)
    y = np.empty(n_half, dtype=np.complex128)
    for j in range(n_half):
        seg = samples[edges[j]:edges[j + 1]]
        y[j] = seg @ half_bit_templates(kind, seg.size)
    return y


def linecode_correlate_decode(wave: SampleWaveform, kind: LineCodeKind,
                              edges: np.ndarray) -> BitBlock:
    """Hard bits from energy-normalized differential correlation (no CSI).

    ``edges`` are half-bit sample boundaries (2N+1 entries, genie timing).
    The mid-bit correlation sign is the decision statistic: FM0 holds level
    within bit 1, Miller inverts within bit 1.
    """
    if kind.kind not in (LineCode.FM0, LineCode.MMS):
        raise UnsupportedKind(
            f"non-coherent correlation detection applies to FM0/MMS, not {kind.kind}"
        )
    y = half_bit_correlations(wave.samples, np.asarray(edges, dtype=np.int64), kind)
    y1, y2 = y[0::2], y[1::2]
    u = np.real(y2 * np.conj(y1)) / (np.abs(y1) * np.abs(y2) + 1e-300)
    if kind.kind is LineCode.FM0:
        bits = (u > 0).astype(np.uint8)
    else:
        bits = (u < 0).astype(np.uint8)
    return BitBlock(bits)
