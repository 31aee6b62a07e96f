"""Fading realizations and the backscatter channel cascade.

TDL-A uses the public 3GPP TR 38.901 normalized power-delay profile scaled to
the configured delay spread; tap gains are independent complex Gaussians with
unit total mean power, quasi-static within one transmission. The backscatter
cascade is conv(h_d2r, coeffs * conv(h_cw2d, cw)); with a single-tone CW at
complex baseband this reduces to conv(h_d2r, g1 * coeffs) where g1 sums the
CW2D taps.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import RateMismatch
from .signals import SampleWaveform


class ChannelProfile(Enum):
    AWGN = "awgn"
    TDL_A = "tdla"


# TR 38.901 Table 7.7.2-1: TDL-A normalized delays and powers (dB)
TDLA_DELAYS = np.array([
    0.0000, 0.3819, 0.4025, 0.5868, 0.4610, 0.5375, 0.6708, 0.5750,
    0.7618, 1.5375, 1.8978, 2.2242, 2.1718, 2.4942, 2.5119, 3.0582,
    4.0810, 4.4579, 4.5695, 4.7966, 5.0066, 5.3043, 9.6586,
])
TDLA_POWERS_DB = np.array([
    -13.4, 0.0, -2.2, -4.0, -6.0, -8.2, -9.9, -10.5,
    -7.5, -15.9, -6.6, -16.7, -12.4, -15.2, -10.8, -11.3,
    -12.7, -16.2, -18.3, -18.9, -17.8, -19.6, -22.7,
])
_TDLA_POWERS = 10.0 ** (TDLA_POWERS_DB / 10.0)
_TDLA_POWERS = _TDLA_POWERS / _TDLA_POWERS.sum()  # unit total mean power


class Topology(Enum):
    MONOSTATIC = "monostatic"
    BISTATIC = "bistatic"


@dataclass(frozen=True)
class ChannelRealization:
    delays: np.ndarray        # seconds
    gains: np.ndarray         # complex
    profile: ChannelProfile
    delay_spread: float = 0.0
    doppler: float = 0.0

    def gain_at(self, freq) -> np.ndarray:
        """Frequency response at the given frequency/frequencies."""
        f = np.atleast_1d(np.asarray(freq, dtype=np.float64))
        h = (self.gains[None, :] * np.exp(-2j * np.pi * f[:, None] * self.delays[None, :])).sum(axis=1)
        return h if np.ndim(freq) else h[0]

    def flat_gain(self) -> complex:
        return complex(self.gains.sum())


@dataclass(frozen=True)
class CascadeConfig:
    topology: Topology = Topology.MONOSTATIC
    cw_freq: float = 900e6          # bookkeeping only; simulation is complex baseband
    cw_leak_db: float = None        # residual CW power relative to signal; None = off


def realize(profile: ChannelProfile, delay_spread: float = 0.0, doppler: float = 0.0,
            rng: np.random.Generator = None) -> ChannelRealization:
    """Draw one quasi-static channel realization."""
    if profile is ChannelProfile.AWGN:
        return ChannelRealization(np.zeros(1), np.ones(1, dtype=complex), profile,
                                  delay_spread, doppler)
    if rng is None:
        raise ValueError("fading profiles need an explicit rng")
    scale = np.sqrt(_TDLA_POWERS / 2.0)
    gains = scale * (rng.standard_normal(23) + 1j * rng.standard_normal(23))
    return ChannelRealization(TDLA_DELAYS * delay_spread, gains, profile,
                              delay_spread, doppler)


def apply_taps(samples: np.ndarray, realization: ChannelRealization,
               sample_rate: float) -> np.ndarray:
    """Convolve with the tapped delay line, delays rounded to the sample grid.

    Output length grows by the maximum rounded delay.
    """
    delays = np.round(realization.delays * sample_rate).astype(np.int64)
    max_d = int(delays.max())
    out = np.zeros(samples.size + max_d, dtype=samples.dtype)
    # taps sharing a rounded delay combine coherently
    for d in np.unique(delays):
        g = samples.dtype.type(realization.gains[delays == d].sum())
        out[d:d + samples.size] += g * samples
    return out


def backscatter_cascade(coeffs: SampleWaveform, h_cw2d: ChannelRealization,
                        h_d2r: ChannelRealization, cfg: CascadeConfig,
                        rng: np.random.Generator = None) -> SampleWaveform:
    """Reader-received waveform for one device (no noise)."""
    g1 = coeffs.samples.dtype.type(h_cw2d.flat_gain())
    # single-tone CW: the CW2D channel collapses to a scalar
    y = apply_taps(g1 * coeffs.samples, h_d2r, coeffs.sample_rate)
    if cfg.cw_leak_db is not None:
        sig_p = np.mean(np.abs(y) ** 2)
        amp = np.sqrt(sig_p * 10.0 ** (cfg.cw_leak_db / 10.0))
        phase = rng.uniform(0, 2 * np.pi) if rng is not None else 0.0
        y = y + amp * np.exp(1j * phase)
    return SampleWaveform(y, coeffs.sample_rate)


def fdma_superpose(user_waves, user_channels, cfg: CascadeConfig = None) -> SampleWaveform:
    """Sum of independently faded per-user cascades, synchronous start.

    ``user_channels`` is a list of (h_cw2d, h_d2r) pairs. Users may differ in
    length (clock error); shorter ones are zero-padded (device absorbs after
    its block ends).
    """
    if cfg is None:
        cfg = CascadeConfig()
    rates = {w.sample_rate for w in user_waves}
    if len(rates) != 1:
        raise RateMismatch(f"sample rates differ: {sorted(rates)}")
    faded = [
        backscatter_cascade(w, h1, h2, cfg)
        for w, (h1, h2) in zip(user_waves, user_channels)
    ]
    n = max(len(f) for f in faded)
    total = np.zeros(n, dtype=faded[0].samples.dtype)
    for f in faded:
        total[: len(f)] += f.samples
    return SampleWaveform(total, user_waves[0].sample_rate)


def add_awgn(wave: SampleWaveform, snr_db: float, signal_power_ref: float,
             rng: np.random.Generator = None) -> SampleWaveform:
    """Add circular complex Gaussian noise.

    Per-sample noise variance is signal_power_ref / 10^(snr_db/10); pass
    snr_db = None (or +inf) for the no-noise flag. The harness folds its
    in-band SNR definition into signal_power_ref.
    """
    if snr_db is None or np.isinf(snr_db):
        return wave
    if signal_power_ref <= 0:
        raise ValueError("signal_power_ref must be positive")
    var = signal_power_ref / 10.0 ** (snr_db / 10.0)
    scale = np.sqrt(var / 2.0)
    n = len(wave)
    if wave.samples.dtype == np.complex64:
        noise = rng.standard_normal(n, dtype=np.float32) * np.float32(scale) \
            + 1j * (rng.standard_normal(n, dtype=np.float32) * np.float32(scale))
        noise = noise.astype(np.complex64)
    else:
        noise = scale * (rng.standard_normal(n) + 1j * rng.standard_normal(n))
    return SampleWaveform(wave.samples + noise, wave.sample_rate, wave.center_offset)
