"""R2D OOK waveforms on an OFDM transmitter (OOK-1 / OOK-4) and the
device-side envelope receiver.

CP handling (check chips): the cyclic prefix is forced to be a seamless
continuation of the first OOK chip by appending a copy of the first chip's
level as the last cp_len samples of the OFDM symbol body (the "check chips")
and shortening the first chip by the same amount. The CP, being a copy of the
symbol tail, then lands in front of the body carrying the first chip's level,
so every on-air data chip has exactly its nominal duration and the Manchester
rule holds across the CP boundary. Without check chips the CP copies the last
chip instead and creates false edges for some bit patterns.

The paper-level description of the check chips admits a second reading
(append the level-INVERSE of the starting chip); that reading leaves a
guaranteed level discontinuity at every CP-to-body junction and cannot
satisfy the Manchester continuation or equal-chip-length requirements, so the
copy reading is implemented. Both readings are noted here deliberately.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .bits import BitBlock
from .errors import (
    AllocationTooSmall,
    ChipCountNotDivisible,
    LengthMismatch,
    ManchesterViolation,
    TooManyCheckChips,
    UnsupportedKind,
)
from .linecode import LineCode, manchester_encode, pie_encode
from .signals import HIGH, ChipSequence, SampleWaveform


class OokMode(Enum):
    OOK1 = "ook1"
    OOK4 = "ook4"


class SynthMethod(Enum):
    LS = "ls"
    DFT_SPREAD = "dft_spread"


@dataclass(frozen=True)
class OfdmGrid:
    n_fft: int = 256
    cp_len: int = 18
    allocated_subcarriers: np.ndarray = None  # FFT bin indices, spectral order
    sample_rate: float = 3.84e6

    def __post_init__(self):
        alloc = self.allocated_subcarriers
        if alloc is None:
            alloc = centered_allocation(self.n_fft, 12)
        alloc = np.ascontiguousarray(alloc, dtype=np.int64)
        if alloc.size == 0:
            raise ValueError("allocation must be non-empty")
        if self.cp_len >= self.n_fft or self.cp_len < 1:
            raise ValueError("cp_len must be in [1, n_fft)")
        # contiguity on the unwrapped spectral axis
        unwrapped = np.where(alloc >= self.n_fft // 2, alloc - self.n_fft, alloc)
        if not np.all(np.diff(unwrapped) == 1):
            raise ValueError("allocated subcarriers must be contiguous")
        object.__setattr__(self, "allocated_subcarriers", alloc)


def centered_allocation(n_fft: int, n_sc: int) -> np.ndarray:
    """n_sc contiguous bins centered on DC, ascending spectral order."""
    first = -(n_sc // 2)
    return np.array([(first + i) % n_fft for i in range(n_sc)], dtype=np.int64)


@dataclass(frozen=True)
class OokSymbolPlan:
    mode: OokMode = OokMode.OOK4
    chips_per_symbol: int = 4
    check_chip_count: int = 1

    def __post_init__(self):
        if self.mode is OokMode.OOK1:
            if self.chips_per_symbol != 1:
                raise ValueError("OOK-1 carries one chip per OFDM symbol")
            if self.check_chip_count != 0:
                raise ValueError("OOK-1 needs no check chips (constant-level symbols)")
        else:
            if self.chips_per_symbol < 2:
                raise ValueError("OOK-4 needs at least 2 chips per symbol")
            if self.check_chip_count > self.chips_per_symbol // 2:
                raise TooManyCheckChips(
                    f"{self.check_chip_count} check chips exceeds M/2 = "
                    f"{self.chips_per_symbol // 2}"
                )
            if self.check_chip_count < 0:
                raise ValueError("check_chip_count must be >= 0")


def line_encode_r2d(bits, code: LineCode):
    if code is LineCode.MANCHESTER:
        return manchester_encode(bits)
    if code is LineCode.PIE:
        return pie_encode(bits)
    raise UnsupportedKind(f"R2D supports Manchester and PIE, not {code}")


def ook_target_waveform(bits, plan: OokSymbolPlan, code: LineCode,
                        grid: OfdmGrid) -> ChipSequence:
    """Line-encode and segment into OFDM symbols of M chips each.

    Chip durations are set so one symbol body spans n_fft samples.
    """
    chips = line_encode_r2d(bits, code)
    M = plan.chips_per_symbol
    if len(chips) % M:
        raise ChipCountNotDivisible(
            f"{len(chips)} chips do not fill symbols of {M} chips"
        )
    if grid.n_fft % M:
        raise ValueError(f"n_fft {grid.n_fft} not divisible into {M} chips")
    chip_dur = (grid.n_fft // M) / grid.sample_rate
    return ChipSequence(chips.levels, chip_dur, chips.chips_per_bit)


def insert_check_chips(symbol_chips: ChipSequence, plan: OokSymbolPlan,
                       grid: OfdmGrid) -> ChipSequence:
    """Body layout for one OFDM symbol: shortened first chip + check chips.

    The last cp_len samples of the body replicate the level(s) of the leading
    check_chip_count chip(s); the first chip gives up cp_len samples so the
    prepended CP restores it to full length on air.
    """
    M = plan.chips_per_symbol
    if len(symbol_chips) != M:
        raise LengthMismatch(f"expected {M} chips in one symbol body")
    c = plan.check_chip_count
    if c > M // 2:
        raise TooManyCheckChips(f"{c} > M/2 = {M // 2}")
    fs = grid.sample_rate
    ell = grid.n_fft // M
    cp = grid.cp_len
    if c == 0:
        return symbol_chips
    if cp >= ell:
        raise ValueError("cp_len must be shorter than one chip")
    levels = list(symbol_chips.levels)
    out_levels = [levels[0]] + levels[1:]
    out_samples = [ell - cp] + [ell] * (M - 1)
    # check region: cp samples replicating the first c chip levels
    sub_edges = np.round(np.arange(c + 1) * cp / c).astype(int)
    for i in range(c):
        width = int(sub_edges[i + 1] - sub_edges[i])
        if width > 0:
            out_levels.append(levels[i])
            out_samples.append(width)
    durations = np.array(out_samples, dtype=np.float64) / fs
    return ChipSequence(np.array(out_levels, dtype=np.uint8), durations,
                        symbol_chips.chips_per_bit)


def _body_samples(body: ChipSequence, grid: OfdmGrid) -> np.ndarray:
    counts = np.round(body.durations * grid.sample_rate).astype(int)
    if counts.sum() != grid.n_fft:
        raise LengthMismatch(
            f"body spans {counts.sum()} samples, expected n_fft = {grid.n_fft}"
        )
    return np.repeat(body.levels.astype(np.float64), counts).astype(np.complex128)


def ofdm_synthesize(target: ChipSequence, grid: OfdmGrid,
                    method: SynthMethod = SynthMethod.LS,
                    residual_threshold: float = 0.25) -> SampleWaveform:
    """One OFDM symbol (CP + body) approximating the target chip waveform.

    LS: keep the target's DFT coefficients on the allocated subcarriers (the
    least-squares projection); DFT-spread: transform-precode a decimated chip
    sequence onto the allocation. CP is a copy of the synthesized tail.
    """
    x = _body_samples(target, grid)
    alloc = grid.allocated_subcarriers

    if method is SynthMethod.LS:
        X = np.fft.fft(x)
        Y = np.zeros_like(X)
        Y[alloc] = X[alloc]
        y = np.fft.ifft(Y)
        energy = float(np.sum(np.abs(x) ** 2))
        if energy > 0:
            residual = float(np.sum(np.abs(y - x) ** 2)) / energy
            if residual > residual_threshold:
                raise AllocationTooSmall(
                    f"LS residual {residual:.3f} above {residual_threshold} for "
                    f"{alloc.size} subcarriers"
                )
    elif method is SynthMethod.DFT_SPREAD:
        L = alloc.size
        pick = np.round(np.arange(L) * grid.n_fft / L).astype(int)
        d = x[pick]
        D = np.fft.fft(d)
        Y = np.zeros(grid.n_fft, dtype=complex)
        Y[alloc] = np.fft.fftshift(D)
        y = np.fft.ifft(Y) * (grid.n_fft / L)
    else:
        raise UnsupportedKind(str(method))

    out = np.concatenate([y[-grid.cp_len:], y])
    return SampleWaveform(out, grid.sample_rate)


def r2d_transmit(bits, plan: OokSymbolPlan, grid: OfdmGrid,
                 code: LineCode = LineCode.MANCHESTER,
                 method: SynthMethod = SynthMethod.LS,
                 residual_threshold: float = 0.25) -> SampleWaveform:
    """Full multi-symbol R2D waveform for a bit block."""
    chips = ook_target_waveform(bits, plan, grid=grid, code=code)
    M = plan.chips_per_symbol
    n_sym = len(chips) // M
    pieces = []
    for s in range(n_sym):
        body = ChipSequence(chips.levels[s * M:(s + 1) * M],
                            chips.durations[s * M:(s + 1) * M])
        body = insert_check_chips(body, plan, grid)
        pieces.append(ofdm_synthesize(body, grid, method, residual_threshold).samples)
    return SampleWaveform(np.concatenate(pieces), grid.sample_rate)


def _chip_windows(plan: OokSymbolPlan, grid: OfdmGrid, n_symbols: int):
    """Effective on-air data chip windows (start, stop) in symbol order."""
    M = plan.chips_per_symbol
    ell = grid.n_fft // M
    stride = grid.n_fft + grid.cp_len
    merged = plan.check_chip_count > 0
    windows = []
    for s in range(n_symbols):
        o = s * stride
        for j in range(M):
            if merged:
                windows.append((o + j * ell, o + (j + 1) * ell))
            else:
                windows.append((o + grid.cp_len + j * ell, o + grid.cp_len + (j + 1) * ell))
    return windows


def _window_energies(samples: np.ndarray, windows) -> np.ndarray:
    return np.array([np.mean(np.abs(samples[a:b]) ** 2) for a, b in windows])


def envelope_decode(rx: SampleWaveform, plan: OokSymbolPlan, code: LineCode,
                    grid: OfdmGrid, n_bits: int) -> BitBlock:
    """Hard OOK decisions from per-chip mean energy; strips check chips.

    Manchester compares the two half-bit energies (no absolute threshold);
    PIE discriminates high-run durations against the global energy midpoint.
    """
    M = plan.chips_per_symbol
    stride = grid.n_fft + grid.cp_len
    n_sym = len(rx) // stride
    e = _window_energies(rx.samples, _chip_windows(plan, grid, n_sym))

    if code is LineCode.MANCHESTER:
        if e.size < 2 * n_bits:
            raise LengthMismatch(f"{e.size} chips cannot carry {n_bits} bits")
        pairs = e[: 2 * n_bits].reshape(n_bits, 2)
        if np.any(pairs[:, 0] == pairs[:, 1]):
            raise ManchesterViolation("no mid-bit energy transition found")
        return BitBlock((pairs[:, 1] > pairs[:, 0]).astype(np.uint8))

    if code is LineCode.PIE:
        thr = (e.max() + e.min()) / 2.0
        high = e > thr
        bits = []
        i = 0
        while i < high.size and len(bits) < n_bits:
            run = 0
            while i < high.size and high[i]:
                run += 1
                i += 1
            if i < high.size:
                i += 1  # consume the low unit
            if run == 0:
                break
            bits.append(0 if run == 1 else 1)
        if len(bits) != n_bits:
            raise LengthMismatch(f"parsed {len(bits)} PIE bits, expected {n_bits}")
        return BitBlock(np.array(bits, dtype=np.uint8))

    raise UnsupportedKind(str(code))


def manchester_rule_report(rx: SampleWaveform, plan: OokSymbolPlan,
                           grid: OfdmGrid, n_symbols: int) -> list:
    """Validator: false edges at CP boundaries and missing mid-bit transitions.

    Classifies window levels by energy against the per-symbol midpoint and
    checks (a) the CP window continues the first on-air chip, (b) each bit's
    halves differ, (c) the check region replicates the leading chip(s).
    Returns a list of violation strings (empty = waveform follows the rule).
    """
    M = plan.chips_per_symbol
    ell = grid.n_fft // M
    cp = grid.cp_len
    stride = grid.n_fft + cp
    merged = plan.check_chip_count > 0
    violations = []
    for s in range(n_symbols):
        o = s * stride
        if merged:
            data = [(o + j * ell, o + (j + 1) * ell) for j in range(M)]
        else:
            data = [(o + cp + j * ell, o + cp + (j + 1) * ell) for j in range(M)]
        e = _window_energies(rx.samples, data)
        thr = (e.max() + e.min()) / 2.0
        classes = e > thr
        e_cp = float(np.mean(np.abs(rx.samples[o:o + cp]) ** 2))
        if (e_cp > thr) != classes[0]:
            violations.append(f"symbol {s}: false edge at the CP boundary")
        for b in range(M // 2):
            if classes[2 * b] == classes[2 * b + 1]:
                violations.append(f"symbol {s} bit {b}: missing mid-bit transition")
        if merged:
            e_chk = float(np.mean(np.abs(rx.samples[o + cp + grid.n_fft - cp:o + stride]) ** 2))
            if (e_chk > thr) != classes[0]:
                violations.append(f"symbol {s}: check region does not replicate chip 0")
    return violations
