"""Reader-side D2R processing: per-user extraction, coherent max-log LLRs with
perfect channel knowledge, and non-coherent hard demodulation.

Coherent detection correlates each bit window against the candidate waveforms'
harmonic line components: per requested odd harmonic k the receiver forms the
sums of r(t)*exp(-j*2*pi*(+/-k f)*t) over the bit (both sidebands of the DSB
spectrum), whose means under candidate c are h(+/-kf) * a_c(+/-kf) * N. The
window sum is itself the low-pass step (integrate-and-dump), so LLRs are exact
max-log given the harmonics used, and square waves at even frequency multiples
null out exactly (the FDMA property). The windowed-sinc FIR front end in
extract_user serves spectrum inspection, leakage measurement and the
non-coherent path.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .bits import BitBlock, LlrBlock
from .channel import ChannelRealization
from .errors import HarmonicBeyondNyquist, LengthMismatch, UnsupportedKind
from .linecode import (
    LineCode,
    LineCodeKind,
    half_bit_correlations,
    half_bit_templates,
    linecode_correlate_decode,
    maxlog_bcjr_batch,
    soft_decode_batch,
)
from .modem_d2r import SquareWaveKind, SquareWaveScheme, square_modulate
from .signals import ChipSequence, SampleWaveform, chip_sample_boundaries


class RxMode(Enum):
    COHERENT_SOFT = "coherent_soft"
    NONCOHERENT_HARD = "noncoherent_hard"


class CsiMode(Enum):
    PERFECT = "perfect"


@dataclass(frozen=True)
class ReceiverConfig:
    mode: RxMode = RxMode.COHERENT_SOFT
    harmonic_combining: bool = False
    harmonics: tuple = None
    filter_bw: float = None  # Hz; callers default to 2x bit rate
    csi: CsiMode = CsiMode.PERFECT

    def __post_init__(self):
        harmonics = self.harmonics
        if harmonics is None:
            harmonics = (1, 3, 5) if self.harmonic_combining else (1,)
        harmonics = tuple(int(k) for k in harmonics)
        for k in harmonics:
            if k < 1 or k % 2 == 0:
                raise ValueError(f"harmonics must be positive odd integers, got {k}")
        object.__setattr__(self, "harmonics", harmonics)


@dataclass(frozen=True)
class PerfectCsi:
    """Genie channel knowledge for one user: composite gain and noise level."""

    h_cw2d: ChannelRealization
    h_d2r: ChannelRealization
    noise_var: float  # per complex sample
    sample_rate: float

    def _rounded(self):
        return np.round(self.h_d2r.delays * self.sample_rate).astype(np.int64)

    def gain_at(self, freq) -> np.ndarray:
        """Composite gain at baseband frequency, delays on the sample grid."""
        f = np.atleast_1d(np.asarray(freq, dtype=np.float64))
        d = self._rounded() / self.sample_rate
        h = (self.h_d2r.gains[None, :] * np.exp(-2j * np.pi * f[:, None] * d[None, :])).sum(axis=1)
        g1 = self.h_cw2d.flat_gain()
        return g1 * (h if np.ndim(freq) else h[0])

    def template_gain(self, template: np.ndarray) -> complex:
        """Composite gain seen by a matched filter for `template` (taps smear it)."""
        d = self._rounded()
        w = template.size
        total = 0j
        for lag in np.unique(d):
            g = self.h_d2r.gains[d == lag].sum()
            if lag == 0:
                r = np.vdot(template, template)
            else:
                r = np.vdot(template[: w - lag], template[lag:])
            total += g * r
        return self.h_cw2d.flat_gain() * total / w


def lowpass_taps(cutoff_hz: float, sample_rate: float, n_taps: int = 129) -> np.ndarray:
    """Hamming-windowed sinc low-pass FIR, unit DC gain, linear phase."""
    k = np.arange(n_taps) - (n_taps - 1) / 2.0
    fc = cutoff_hz / sample_rate
    h = 2.0 * fc * np.sinc(2.0 * fc * k) * np.hamming(n_taps)
    return h / h.sum()


def extract_user(rx: SampleWaveform, f_shift: float, cfg: ReceiverConfig,
                 fir: bool = True, n_taps: int = 129):
    """Per-harmonic complex envelope streams for one user.

    Harmonic k is mixed down by -k*f_shift; with ``fir`` the windowed-sinc
    low-pass (group delay compensated via centered convolution) limits the
    stream to filter_bw. f_shift = 0 (baseband line codes) yields a single
    DC-centered stream per requested harmonic.
    """
    streams = []
    t = np.arange(len(rx))
    for k in cfg.harmonics:
        f = k * f_shift
        if abs(f) >= rx.sample_rate / 2.0:
            raise HarmonicBeyondNyquist(
                f"harmonic {k} at {f} Hz exceeds Nyquist {rx.sample_rate / 2} Hz"
            )
        mixed = rx.samples * np.exp(-2j * np.pi * f / rx.sample_rate * t)
        if fir:
            if cfg.filter_bw is None:
                raise ValueError("filter_bw must be set for FIR extraction")
            taps = lowpass_taps(cfg.filter_bw, rx.sample_rate, n_taps)
            mixed = np.convolve(mixed, taps, mode="same")
        streams.append(SampleWaveform(mixed, rx.sample_rate, center_offset=f))
    return streams


def window_edges(chips: ChipSequence, sample_rate: float, chips_per_window) -> np.ndarray:
    """Sample boundaries of decision windows (bits or half-bits), SFO-aware."""
    bounds = chip_sample_boundaries(chips, sample_rate)
    if np.ndim(chips_per_window) == 0:
        n = len(chips) // int(chips_per_window)
        counts = np.full(n, int(chips_per_window), dtype=np.int64)
    else:
        counts = np.asarray(chips_per_window, dtype=np.int64)
    idx = np.concatenate([[0], np.cumsum(counts)])
    return bounds[idx]


def _window_sums(x: np.ndarray, edges: np.ndarray) -> np.ndarray:
    """Sums of x over [edges[i], edges[i+1]) windows; windows past the end sum to 0."""
    stop = int(min(edges[-1], x.size))
    e = np.minimum(np.asarray(edges, dtype=np.int64), stop)
    starts = e[:-1]
    valid = starts < stop
    if valid.all():
        sums = np.add.reduceat(x[:stop], starts)
    else:
        sums = np.zeros(starts.size, dtype=x.dtype)
        k = int(valid.sum())
        if k:
            sums[:k] = np.add.reduceat(x[:stop], starts[:k])
    return np.where(np.diff(e) > 0, sums, 0)


_RAMP_CACHE: dict = {}


def _mix_ramp(f: float, fs: float, n: int, dtype=np.complex128) -> np.ndarray:
    """exp(-j2pi f t) for t in [0, n); cached and extended as needed."""
    key = (round(f, 9), round(fs, 6), np.dtype(dtype).name)
    cached = _RAMP_CACHE.get(key)
    if cached is None or cached.size < n:
        if len(_RAMP_CACHE) > 64:
            _RAMP_CACHE.clear()
        size = max(n, 0 if cached is None else cached.size)
        real_t = np.float32 if dtype == np.complex64 else np.float64
        theta = real_t(-2.0 * np.pi * f / fs) * np.arange(size, dtype=real_t)
        ramp = np.empty(size, dtype=dtype)
        np.cos(theta, out=ramp.real)
        np.sin(theta, out=ramp.imag)
        _RAMP_CACHE[key] = ramp
        cached = ramp
    return cached[:n]


def _line_sums(samples: np.ndarray, fs: float, freqs: np.ndarray,
               edges: np.ndarray) -> np.ndarray:
    """(n_windows, n_freqs) sums of r(t) e^{-j2pi f t} per window.

    Negative frequencies reuse the conjugate of the positive-frequency ramp.
    """
    out = np.empty((edges.size - 1, freqs.size), dtype=np.complex128)
    done = {}
    for j, f in enumerate(freqs):
        if -f in done:
            ramp = np.conj(done[-f])
        else:
            ramp = _mix_ramp(f, fs, samples.size, samples.dtype)
            done[f] = ramp
        out[:, j] = _window_sums(samples * ramp, edges)
    return out


def _pattern_line_coeffs(pattern: np.ndarray, fs: float, freqs: np.ndarray) -> np.ndarray:
    """Mean of pattern(t) e^{-j2pi f t} over the pattern, per frequency."""
    t = np.arange(pattern.size)
    return np.array([
        np.mean(pattern * np.exp(-2j * np.pi * f / fs * t)) for f in freqs
    ])


def _expand_bit_pattern(levels: np.ndarray, spc: int) -> np.ndarray:
    return np.repeat(2.0 * levels.astype(np.float64) - 1.0, spc)


def _scheme_lines(scheme: SquareWaveScheme, harmonics, f_eff: float) -> np.ndarray:
    freqs = []
    for k in harmonics:
        freqs.extend([k * f_eff, -k * f_eff])
    if scheme.kind is SquareWaveKind.MSK:
        ratio = scheme.msk_high_factor
        for k in harmonics:
            freqs.extend([k * ratio * f_eff, -k * ratio * f_eff])
    return np.array(freqs)


def coherent_llrs(rx: SampleWaveform, kind, cfg: ReceiverConfig, csi: PerfectCsi,
                  n_bits: int, bit_rate: float, f_eff: float = None,
                  edges: np.ndarray = None) -> LlrBlock:
    """Exact max-log LLRs for one user under perfect CSI.

    ``kind`` is a SquareWaveScheme (BPSK/QPSK/OOK per-bit, MSK via the
    2-state level-continuity trellis) or a LineCodeKind (half-bit matched
    filters feeding the line-code forward-backward). ``edges`` are genie
    bit-window sample boundaries; defaults assume nominal timing.
    """
    if isinstance(kind, SquareWaveScheme):
        return _square_llrs(rx, kind, cfg, csi, n_bits, f_eff, edges)
    if isinstance(kind, LineCodeKind):
        metrics = coherent_halfbit_metrics(rx, kind, csi, edges)
        if metrics.shape[0] != 2 * n_bits:
            raise LengthMismatch(f"expected {2 * n_bits} half-bit windows")
        llrs = soft_decode_batch(metrics[None], kind)[0]
        return LlrBlock(llrs, scale=csi.noise_var)
    raise UnsupportedKind(str(kind))


def _square_llrs(rx, scheme, cfg, csi, n_bits, f_eff, edges):
    fs = rx.sample_rate
    f = scheme.f_shift if f_eff is None else f_eff
    spb = int(round(fs / scheme.bit_rate))

    # mixing happens at the user's effective (clock-scaled) frequencies, while
    # the candidate coefficients live in device time and stay at the nominal
    # frequencies: the stretch cancels inside the device's own bit
    nom = _scheme_lines(scheme, cfg.harmonics, scheme.f_shift)

    if scheme.kind is SquareWaveKind.QPSK:
        n_sym = n_bits // 2
        if edges is None:
            edges = np.arange(n_sym + 1) * 2 * spb
        spc = 2 * spb // (8 * scheme.cycles_per_bit)
        freqs = _scheme_lines(scheme, cfg.harmonics, f)
        pats = {
            c: _expand_bit_pattern(
                np.roll(np.tile([1, 1, 0, 0], 2 * scheme.cycles_per_bit), shift), spc
            )
            for c, shift in {(0, 0): 0, (0, 1): 1, (1, 0): 2, (1, 1): 3}.items()
        }
        y = _line_sums(rx.samples, fs, freqs, edges)
        widths = np.diff(edges)
        h = csi.gain_at(freqs)
        d = {}
        for c, pat in pats.items():
            a = _pattern_line_coeffs(pat, fs, nom)
            mu = h[None, :] * a[None, :] * widths[:, None]
            d[c] = np.sum(np.abs(y - mu) ** 2, axis=1) / (csi.noise_var * widths)
        llr1 = np.minimum(d[(1, 0)], d[(1, 1)]) - np.minimum(d[(0, 0)], d[(0, 1)])
        llr2 = np.minimum(d[(0, 1)], d[(1, 1)]) - np.minimum(d[(0, 0)], d[(1, 0)])
        llrs = np.stack([llr1, llr2], axis=1).reshape(-1)
        return LlrBlock(llrs, scale=csi.noise_var)

    if scheme.kind is SquareWaveKind.MSK:
        return _msk_llrs(rx, scheme, cfg, csi, n_bits, f, edges)

    # BPSK and OOK: one decision per bit window
    if edges is None:
        edges = np.arange(n_bits + 1) * spb
    cyc = scheme.cycles_per_bit
    spc = spb // (2 * cyc)
    base = _expand_bit_pattern(np.tile([1, 0], cyc), spc)
    freqs = _scheme_lines(scheme, cfg.harmonics, f)
    a = _pattern_line_coeffs(base, fs, nom)
    y = _line_sums(rx.samples, fs, freqs, edges)
    widths = np.diff(edges)
    h = csi.gain_at(freqs)
    mu = h[None, :] * a[None, :] * widths[:, None]

    if scheme.kind is SquareWaveKind.BPSK:
        llrs = 4.0 * np.real(np.sum(np.conj(mu) * y, axis=1)) / (csi.noise_var * widths)
        return LlrBlock(llrs, scale=csi.noise_var)

    if scheme.kind is SquareWaveKind.OOK:
        # OOK sends the wave's HIGH half at amplitude 1 and absence as 0:
        # candidate means are (1+pattern)/2 -> rescale the +/-1 coefficients
        dc = _pattern_line_coeffs(np.full(base.size, 1.0), fs, nom)
        mu1 = h[None, :] * ((a + dc)[None, :] / 2.0) * widths[:, None]
        d1 = np.sum(np.abs(y - mu1) ** 2, axis=1)
        d0 = np.sum(np.abs(y) ** 2, axis=1)
        llrs = (d1 - d0) / (csi.noise_var * widths)
        return LlrBlock(llrs, scale=csi.noise_var)

    raise UnsupportedKind(str(scheme.kind))


def _msk_llrs(rx, scheme, cfg, csi, n_bits, f, edges):
    fs = rx.sample_rate
    spb = int(round(fs / scheme.bit_rate))
    if edges is None:
        edges = np.arange(n_bits + 1) * spb
    chips_low = int(round(2 * scheme.f_shift / scheme.bit_rate))
    chips_high = int(round(2 * scheme.msk_high_factor * scheme.f_shift / scheme.bit_rate))
    freqs = _scheme_lines(scheme, cfg.harmonics, f)
    nom = _scheme_lines(scheme, cfg.harmonics, scheme.f_shift)
    y = _line_sums(rx.samples, fs, freqs, edges)
    widths = np.diff(edges)
    h = csi.gain_at(freqs)

    # candidate patterns per (start level s in {+,-}, bit b); coefficients in
    # device time (nominal frequencies)
    def pattern(start, n_chips):
        lv = np.where(np.arange(n_chips) % 2 == 0, start, -start).astype(np.float64)
        return np.repeat(lv, spb // n_chips)

    mus = np.empty((2, 2, freqs.size), dtype=np.complex128)
    for si, s in enumerate((1.0, -1.0)):
        for b, n_chips in ((0, chips_low), (1, chips_high)):
            a = _pattern_line_coeffs(pattern(s, n_chips), fs, nom)
            mus[si, b] = h * a
    # branch metrics (1, N, S, 2); next state from chip-count parity
    bm = np.empty((1, n_bits, 2, 2))
    for si in range(2):
        for b in (0, 1):
            mu = mus[si, b][None, :] * widths[:, None]
            bm[0, :, si, b] = -np.sum(np.abs(y - mu) ** 2, axis=1) / (csi.noise_var * widths)
    nxt = np.empty((2, 2), dtype=np.int64)
    for si in range(2):
        for b, n_chips in ((0, chips_low), (1, chips_high)):
            flips = n_chips % 2
            nxt[si, b] = si ^ flips
    llrs = maxlog_bcjr_batch(bm, nxt)[0]
    return LlrBlock(llrs, scale=csi.noise_var)


def coherent_halfbit_metrics(rx: SampleWaveform, kind: LineCodeKind, csi: PerfectCsi,
                             edges: np.ndarray) -> np.ndarray:
    """(2N, 2) matched-filter log-metrics per half-bit, polarity +1 / -1."""
    edges = np.asarray(edges, dtype=np.int64)
    y = half_bit_correlations(rx.samples, edges, kind)
    width = int(edges[1] - edges[0])
    template = half_bit_templates(kind, width)
    h_eff = csi.template_gain(template)
    mu = h_eff * width
    m_plus = -np.abs(y - mu) ** 2 / (csi.noise_var * width)
    m_minus = -np.abs(y + mu) ** 2 / (csi.noise_var * width)
    return np.stack([m_plus, m_minus], axis=1)


def noncoherent_bits(rx: SampleWaveform, kind, edges: np.ndarray) -> BitBlock:
    """Hard bits via differential correlation; line codes only."""
    if isinstance(kind, SquareWaveScheme):
        raise UnsupportedKind(
            "non-coherent correlation detection applies to differential line codes"
        )
    return linecode_correlate_decode(rx, kind, edges)
