import numpy as np
import pytest

from aiotphy import channel as ch
from aiotphy import modem_d2r as md
from aiotphy import receiver as rx
from aiotphy.bits import BitBlock
from aiotphy.errors import HarmonicBeyondNyquist, UnsupportedKind
from aiotphy.linecode import LineCode, LineCodeKind, fm0_encode, mms_encode
from aiotphy.signals import SampleWaveform

BPSK = md.SquareWaveScheme(md.SquareWaveKind.BPSK, 240e3, 60e3)
PSK_MAP = md.BackscatterMap(md.BackscatterKind.PSK)
FS = 3.84e6
UNIT = ch.realize(ch.ChannelProfile.AWGN)


def unit_csi(noise_var=1.0, fs=FS):
    return rx.PerfectCsi(UNIT, UNIT, noise_var, fs)


def bpsk_wave(bits, scheme=BPSK, fs=FS):
    chips = md.square_modulate(BitBlock(bits), scheme)
    return md.backscatter_apply(chips, PSK_MAP, fs)


class TestConfig:
    def test_even_harmonic_rejected(self):
        with pytest.raises(ValueError):
            rx.ReceiverConfig(harmonics=(2,))

    def test_combining_defaults(self):
        assert rx.ReceiverConfig(harmonic_combining=True).harmonics == (1, 3, 5)
        assert rx.ReceiverConfig().harmonics == (1,)


class TestExtractUser:
    def test_harmonic_beyond_nyquist(self):
        wave = SampleWaveform(np.zeros(64, dtype=complex), FS)
        cfg = rx.ReceiverConfig(harmonics=(1, 3, 5, 7, 9), filter_bw=120e3)
        with pytest.raises(HarmonicBeyondNyquist):
            rx.extract_user(wave, 240e3, cfg)

    def test_fundamental_power_fraction(self):
        # real unmodulated square: both sidebands carry 8/pi^2 of total power
        bits = np.zeros(256, dtype=np.uint8)
        wave = bpsk_wave(bits, fs=64 * 480e3)
        cfg = rx.ReceiverConfig(harmonics=(1,), filter_bw=120e3)
        stream = rx.extract_user(wave, 240e3, cfg, n_taps=513)[0]
        core = stream.samples[2000:-2000]  # avoid FIR edge transients
        frac = 2.0 * np.mean(np.abs(core) ** 2) / wave.mean_power()
        assert frac == pytest.approx(8 / np.pi ** 2, abs=0.012)

    def test_other_user_lines_rejected_30db(self):
        # even-multiple planning: user 2's odd-harmonic lines never enter the
        # user-1 passband, so the FIR leaves only stopband leakage
        bits = np.zeros(256, dtype=np.uint8)
        user2 = md.SquareWaveScheme(md.SquareWaveKind.BPSK, 480e3, 60e3)
        wave2 = bpsk_wave(bits, scheme=user2)
        cfg = rx.ReceiverConfig(harmonics=(1,), filter_bw=60e3)
        leak = rx.extract_user(wave2, 240e3, cfg)[0]
        core = np.abs(leak.samples[2000:-2000]) ** 2
        assert np.mean(core) / wave2.mean_power() < 1e-3

    def test_other_user_nulls_in_bit_correlations(self):
        # the bit-windowed correlation receiver rejects an even-multiple user
        # exactly (square waves at f and 2f are orthogonal over a bit)
        rng = np.random.default_rng(61)
        bits1 = rng.integers(0, 2, 32, dtype=np.uint8)
        bits2 = rng.integers(0, 2, 32, dtype=np.uint8)
        user2 = md.SquareWaveScheme(md.SquareWaveKind.BPSK, 480e3, 60e3)
        w1 = bpsk_wave(bits1)
        w2 = bpsk_wave(bits2, scheme=user2)
        cfg = rx.ReceiverConfig(harmonics=(1,))
        alone = rx.coherent_llrs(w1, BPSK, cfg, unit_csi(), 32, BPSK.bit_rate)
        both = SampleWaveform(w1.samples + w2.samples, FS)
        mixed = rx.coherent_llrs(both, BPSK, cfg, unit_csi(), 32, BPSK.bit_rate)
        assert np.allclose(mixed.llrs, alone.llrs, rtol=1e-9, atol=1e-6)


class TestCoherentSquare:
    def test_bpsk_noiseless_signs_and_equal_magnitudes(self):
        rng = np.random.default_rng(62)
        bits = rng.integers(0, 2, 64, dtype=np.uint8)
        wave = bpsk_wave(bits)
        cfg = rx.ReceiverConfig(harmonics=(1,))
        llrs = rx.coherent_llrs(wave, BPSK, cfg, unit_csi(), 64, BPSK.bit_rate)
        assert np.array_equal(llrs.hard_bits(), bits)
        mags = np.abs(llrs.llrs)
        assert np.allclose(mags, mags[0])

    def test_llr_scales_inverse_noise_var(self):
        bits = np.array([0, 1, 1, 0], dtype=np.uint8)
        wave = bpsk_wave(bits)
        cfg = rx.ReceiverConfig(harmonics=(1,))
        l1 = rx.coherent_llrs(wave, BPSK, cfg, unit_csi(1.0), 4, BPSK.bit_rate)
        l2 = rx.coherent_llrs(wave, BPSK, cfg, unit_csi(4.0), 4, BPSK.bit_rate)
        assert np.allclose(l1.llrs, 4.0 * l2.llrs)

    def test_bpsk_reduction_gain_pin(self):
        # fundamental-only matched filter captures the square wave's
        # fundamental power fraction (8/pi^2 in continuous time; pinned at the
        # discrete 8-samples-per-chip value)
        bits = np.array([0], dtype=np.uint8)
        wave = bpsk_wave(bits)
        cfg = rx.ReceiverConfig(harmonics=(1,))
        llrs = rx.coherent_llrs(wave, BPSK, cfg, unit_csi(2.0), 1, BPSK.bit_rate)
        n = len(wave)
        full_mf = 4.0 * n / 2.0
        ratio = llrs.llrs[0] / full_mf
        assert ratio == pytest.approx(0.82107, abs=1e-3)

    def test_mrc_margin_never_shrinks(self):
        rng = np.random.default_rng(63)
        bits = rng.integers(0, 2, 32, dtype=np.uint8)
        wave = bpsk_wave(bits)
        csi = unit_csi()
        m1 = rx.coherent_llrs(wave, BPSK, rx.ReceiverConfig(harmonics=(1,)), csi,
                              32, BPSK.bit_rate)
        m135 = rx.coherent_llrs(wave, BPSK, rx.ReceiverConfig(harmonics=(1, 3, 5)), csi,
                                32, BPSK.bit_rate)
        assert np.abs(m135.llrs).min() >= np.abs(m1.llrs).min()

    def test_qpsk_noiseless_exact(self):
        q = md.SquareWaveScheme(md.SquareWaveKind.QPSK, 240e3, 60e3)
        rng = np.random.default_rng(64)
        bits = rng.integers(0, 2, 40, dtype=np.uint8)
        wave = md.backscatter_apply(md.square_modulate(BitBlock(bits), q), PSK_MAP, FS)
        cfg = rx.ReceiverConfig(harmonics=(1,))
        llrs = rx.coherent_llrs(wave, q, cfg, unit_csi(), 40, q.bit_rate)
        assert np.array_equal(llrs.hard_bits(), bits)

    def test_ook_noiseless_exact(self):
        s = md.SquareWaveScheme(md.SquareWaveKind.OOK, 240e3, 60e3)
        rng = np.random.default_rng(65)
        bits = rng.integers(0, 2, 48, dtype=np.uint8)
        wave = md.backscatter_apply(
            md.square_modulate(BitBlock(bits), s),
            md.BackscatterMap(md.BackscatterKind.ASK), FS,
        )
        cfg = rx.ReceiverConfig(harmonics=(1,))
        llrs = rx.coherent_llrs(wave, s, cfg, unit_csi(), 48, s.bit_rate)
        assert np.array_equal(llrs.hard_bits(), bits)

    def test_msk_noiseless_exact(self):
        s = md.SquareWaveScheme(md.SquareWaveKind.MSK, 240e3, 60e3)
        fs = md.default_sample_rate(360e3, chip_rates=(480e3, 720e3))
        rng = np.random.default_rng(66)
        bits = rng.integers(0, 2, 56, dtype=np.uint8)
        wave = md.backscatter_apply(md.square_modulate(BitBlock(bits), s), PSK_MAP, fs)
        cfg = rx.ReceiverConfig(harmonics=(1,))
        llrs = rx.coherent_llrs(wave, s, cfg, unit_csi(fs=fs), 56, s.bit_rate)
        assert np.array_equal(llrs.hard_bits(), bits)

    def test_flat_complex_channel_handled(self):
        rng = np.random.default_rng(67)
        bits = rng.integers(0, 2, 24, dtype=np.uint8)
        wave = bpsk_wave(bits)
        g = 0.4 - 1.1j
        flat = ch.ChannelRealization(np.zeros(1), np.array([g]), ch.ChannelProfile.AWGN)
        faded = SampleWaveform(wave.samples * g, FS)
        csi = rx.PerfectCsi(UNIT, flat, 1.0, FS)
        llrs = rx.coherent_llrs(faded, BPSK, rx.ReceiverConfig(harmonics=(1,)), csi,
                                24, BPSK.bit_rate)
        assert np.array_equal(llrs.hard_bits(), bits)

    def test_multipath_genie_signs_exact(self):
        rng = np.random.default_rng(68)
        bits = rng.integers(0, 2, 32, dtype=np.uint8)
        wave = bpsk_wave(bits)
        h = ch.realize(ch.ChannelProfile.TDL_A, 300e-9, rng=rng)  # forces a 1-sample tap
        faded = ch.backscatter_cascade(wave, UNIT, h, ch.CascadeConfig())
        csi = rx.PerfectCsi(UNIT, h, 1.0, FS)
        llrs = rx.coherent_llrs(faded, BPSK, rx.ReceiverConfig(harmonics=(1,)), csi,
                                32, BPSK.bit_rate)
        assert np.array_equal(llrs.hard_bits(), bits)


class TestCoherentLineCodes:
    def test_fm0_trellis_noiseless_exact(self):
        rng = np.random.default_rng(69)
        bits = rng.integers(0, 2, 128, dtype=np.uint8)
        chips = fm0_encode(bits, bit_rate=60e3)
        wave = md.backscatter_apply(chips, PSK_MAP, FS)
        kind = LineCodeKind(LineCode.FM0)
        edges = rx.window_edges(chips, FS, 1)  # half-bit = 1 chip
        llrs = rx.coherent_llrs(wave, kind, rx.ReceiverConfig(), unit_csi(),
                                128, 60e3, edges=edges)
        assert np.array_equal(llrs.hard_bits(), bits)

    def test_mms2_trellis_noiseless_exact(self):
        rng = np.random.default_rng(70)
        bits = rng.integers(0, 2, 96, dtype=np.uint8)
        chips = mms_encode(bits, 2, bit_rate=60e3)
        wave = md.backscatter_apply(chips, PSK_MAP, FS)
        kind = LineCodeKind(LineCode.MMS, 2)
        edges = rx.window_edges(chips, FS, 2)  # half-bit = M chips
        llrs = rx.coherent_llrs(wave, kind, rx.ReceiverConfig(), unit_csi(),
                                96, 60e3, edges=edges)
        assert np.array_equal(llrs.hard_bits(), bits)


class TestNoncoherent:
    def test_square_scheme_rejected(self):
        wave = bpsk_wave(np.array([0, 1], dtype=np.uint8))
        with pytest.raises(UnsupportedKind):
            rx.noncoherent_bits(wave, BPSK, np.array([0, 32, 64]))

    def test_mms2_noiseless_exact(self):
        rng = np.random.default_rng(71)
        bits = rng.integers(0, 2, 80, dtype=np.uint8)
        chips = mms_encode(bits, 2, bit_rate=60e3)
        wave = md.backscatter_apply(chips, PSK_MAP, FS)
        edges = rx.window_edges(chips, FS, 2)
        out = rx.noncoherent_bits(wave, LineCodeKind(LineCode.MMS, 2), edges)
        assert np.array_equal(out.bits, bits)

    def test_fm0_with_unknown_phase(self):
        rng = np.random.default_rng(72)
        bits = rng.integers(0, 2, 64, dtype=np.uint8)
        chips = fm0_encode(bits, bit_rate=60e3)
        wave = md.backscatter_apply(chips, PSK_MAP, FS)
        rotated = SampleWaveform(wave.samples * np.exp(1.9j), FS)
        edges = rx.window_edges(chips, FS, 1)
        out = rx.noncoherent_bits(rotated, LineCodeKind(LineCode.FM0), edges)
        assert np.array_equal(out.bits, bits)


class TestDeterminism:
    def test_identical_seeds_identical_llrs(self):
        def run():
            rng = np.random.default_rng(73)
            bits = rng.integers(0, 2, 32, dtype=np.uint8)
            wave = bpsk_wave(bits)
            h1 = ch.realize(ch.ChannelProfile.TDL_A, 30e-9, rng=rng)
            h2 = ch.realize(ch.ChannelProfile.TDL_A, 30e-9, rng=rng)
            y = ch.backscatter_cascade(wave, h1, h2, ch.CascadeConfig())
            y = ch.add_awgn(y, 10.0, 1.0, rng)
            csi = rx.PerfectCsi(h1, h2, 0.1, FS)
            return rx.coherent_llrs(y, BPSK, rx.ReceiverConfig(harmonics=(1,)), csi,
                                    32, BPSK.bit_rate)
        a, b = run(), run()
        assert a.llrs.tobytes() == b.llrs.tobytes()
