import numpy as np
import pytest

from aiotphy import linecode as lc
from aiotphy.errors import InvalidM, UnsupportedKind
from aiotphy.signals import HIGH, LOW, SampleWaveform

H, L = HIGH, LOW


def levels(chips):
    return chips.levels.tolist()


class TestPie:
    def test_zero_bit(self):
        chips = lc.pie_encode([0], tari=2.0)
        assert levels(chips) == [H, L]
        assert np.allclose(chips.durations, 1.0)

    def test_one_bit(self):
        assert levels(lc.pie_encode([1])) == [H, H, H, L]

    def test_total_duration_010(self):
        chips = lc.pie_encode([0, 1, 0], tari=1.0)
        assert chips.total_duration == pytest.approx(4.0)  # 1 + 2 + 1 Tari

    def test_per_bit_chip_counts(self):
        chips = lc.pie_encode([0, 1, 1])
        assert chips.chips_per_bit.tolist() == [2, 4, 4]


class TestManchester:
    def test_conventions(self):
        assert levels(lc.manchester_encode([0])) == [H, L]
        assert levels(lc.manchester_encode([1])) == [L, H]
        assert levels(lc.manchester_encode([0, 1])) == [H, L, L, H]

    def test_one_mid_bit_transition_per_bit_exhaustive(self):
        for word in range(1 << 16):
            bits = [(word >> i) & 1 for i in range(16)]
            chips = lc.manchester_encode(bits).levels.reshape(-1, 2)
            assert np.all(chips[:, 0] != chips[:, 1])

    def test_chip_duration(self):
        chips = lc.manchester_encode([1, 0], bit_rate=1000.0)
        assert np.allclose(chips.durations, 0.0005)


class TestFm0:
    def test_flat_ones(self):
        assert levels(lc.fm0_encode([1, 1], initial_level=H)) == [L, L, H, H]

    def test_zero_inverts_mid_bit(self):
        assert levels(lc.fm0_encode([0], initial_level=H)) == [L, H]

    def test_transition_at_every_bit_boundary(self):
        rng = np.random.default_rng(31)
        bits = rng.integers(0, 2, 200)
        chips = lc.fm0_encode(bits).levels
        # last chip of bit i differs from first chip of bit i+1
        assert np.all(chips[1:-1:2] != chips[2::2])

    def test_injective_given_initial_level(self):
        seen = set()
        for word in range(1 << 12):
            bits = [(word >> i) & 1 for i in range(12)]
            seen.add(tuple(lc.fm0_encode(bits, initial_level=H).levels.tolist()))
        assert len(seen) == 1 << 12


class TestMms:
    def test_single_one_m2(self):
        assert levels(lc.mms_encode([1], 2)) == [H, L, L, H]

    def test_two_zeros_invert_at_boundary_only(self):
        halves = lc.miller_baseband([0, 0])
        assert halves.tolist() == [1.0, 1.0, -1.0, -1.0]

    def test_invalid_m(self):
        with pytest.raises(InvalidM):
            lc.mms_encode([1, 0], 3)

    def test_subcarrier_removal_recovers_miller(self):
        rng = np.random.default_rng(32)
        for m in (2, 4, 8):
            bits = rng.integers(0, 2, 40)
            chips = lc.mms_encode(bits, m)
            sub = np.tile(np.tile([1.0, -1.0], m), bits.size)
            recovered = chips.bipolar() * sub
            baseband = np.repeat(lc.miller_baseband(bits), m)
            assert np.array_equal(recovered, baseband)

    def test_spectrum_peak_at_subcarrier(self):
        # energy concentrates ~M/T away from DC; the Miller baseband for a
        # constant input alternates at the bit scale, so the modulated peak
        # sits at (M +/- 0.5)/T while the raw subcarrier peaks exactly at M/T
        for m in (2, 4, 8):
            bits = np.zeros(64, dtype=np.uint8)
            chips = lc.mms_encode(bits, m, bit_rate=1.0)
            fs = 2.0 * m  # one sample per chip
            x = chips.bipolar()
            spec = np.abs(np.fft.rfft(x)) ** 2
            freqs = np.fft.rfftfreq(x.size, d=1.0 / fs)
            peak = freqs[np.argmax(spec[1:]) + 1]
            assert abs(peak - m) <= 0.5 + fs / x.size

            sub = np.tile(np.tile([1.0, -1.0], m), bits.size)
            sspec = np.abs(np.fft.rfft(sub)) ** 2
            speak = freqs[np.argmax(sspec[1:]) + 1]
            assert speak == pytest.approx(m, abs=fs / sub.size)

    def test_chips_per_bit(self):
        assert lc.mms_encode([1, 0, 1], 4).chips_per_bit == 8
        assert len(lc.mms_encode([1, 0, 1], 4)) == 24


class TestEnhancedManchester:
    def test_m1_is_classic_manchester(self):
        rng = np.random.default_rng(33)
        bits = rng.integers(0, 2, 64)
        assert np.array_equal(
            lc.enhanced_manchester_encode(bits, 1).levels,
            lc.manchester_encode(bits).levels,
        )

    def test_output_length(self):
        assert len(lc.enhanced_manchester_encode([1, 0], 4)) == 16


class TestSoftDecode:
    @staticmethod
    def noiseless_metrics(chips, kind):
        # matched-filter metrics straight from the chip polarities per half-bit
        tr_cpb = chips.chips_per_bit
        pol = chips.bipolar().reshape(-1, tr_cpb // 2).mean(axis=1)
        metrics = np.stack([pol, -pol], axis=1)  # [pol=+1 hyp, pol=-1 hyp]
        return metrics

    def test_fm0_noiseless_exact(self):
        rng = np.random.default_rng(34)
        bits = rng.integers(0, 2, 100)
        chips = lc.fm0_encode(bits)
        llrs = lc.linecode_soft_decode(
            self.noiseless_metrics(chips, None), lc.LineCodeKind(lc.LineCode.FM0)
        )
        assert np.array_equal(llrs.hard_bits(), bits)

    def test_mms_noiseless_exact(self):
        rng = np.random.default_rng(35)
        bits = rng.integers(0, 2, 80)
        kind = lc.LineCodeKind(lc.LineCode.MMS, 2)
        chips = lc.mms_encode(bits, 2)
        # polarity of each half-bit relative to the subcarrier template
        sub = np.tile([1.0, -1.0], 2)[:2]
        halves = chips.bipolar().reshape(-1, 2)
        pol = (halves * sub).mean(axis=1)
        metrics = np.stack([pol, -pol], axis=1)
        llrs = lc.linecode_soft_decode(metrics, kind)
        assert np.array_equal(llrs.hard_bits(), bits)

    def test_manchester_noiseless_exact(self):
        bits = np.array([0, 1, 1, 0, 1], dtype=np.uint8)
        chips = lc.manchester_encode(bits)
        pol = chips.bipolar().reshape(-1, 1).mean(axis=1)
        metrics = np.stack([pol, -pol], axis=1)
        llrs = lc.linecode_soft_decode(metrics, lc.LineCodeKind(lc.LineCode.MANCHESTER))
        assert np.array_equal(llrs.hard_bits(), bits)


class TestCorrelateDecode:
    @staticmethod
    def wave_and_edges(chips, samples_per_chip=4):
        x = np.repeat(chips.bipolar(), samples_per_chip).astype(complex)
        spc = samples_per_chip
        half = chips.chips_per_bit // 2 * spc
        edges = np.arange(0, x.size + 1, half)
        return SampleWaveform(x, 1.0), edges

    def test_fm0_noiseless_exact(self):
        rng = np.random.default_rng(36)
        bits = rng.integers(0, 2, 120)
        wave, edges = self.wave_and_edges(lc.fm0_encode(bits))
        out = lc.linecode_correlate_decode(wave, lc.LineCodeKind(lc.LineCode.FM0), edges)
        assert np.array_equal(out.bits, bits)

    def test_mms2_noiseless_exact(self):
        rng = np.random.default_rng(37)
        bits = rng.integers(0, 2, 90)
        wave, edges = self.wave_and_edges(lc.mms_encode(bits, 2))
        out = lc.linecode_correlate_decode(wave, lc.LineCodeKind(lc.LineCode.MMS, 2), edges)
        assert np.array_equal(out.bits, bits)

    def test_decode_survives_complex_channel_gain(self):
        rng = np.random.default_rng(38)
        bits = rng.integers(0, 2, 60)
        wave, edges = self.wave_and_edges(lc.mms_encode(bits, 4))
        faded = SampleWaveform(wave.samples * (0.3 - 0.8j), 1.0)
        out = lc.linecode_correlate_decode(faded, lc.LineCodeKind(lc.LineCode.MMS, 4), edges)
        assert np.array_equal(out.bits, bits)

    def test_unsupported_kind(self):
        wave = SampleWaveform(np.ones(8, dtype=complex), 1.0)
        with pytest.raises(UnsupportedKind):
            lc.linecode_correlate_decode(
                wave, lc.LineCodeKind(lc.LineCode.MANCHESTER), np.array([0, 4, 8])
            )


class TestLengths:
    def test_declared_chip_counts(self):
        rng = np.random.default_rng(39)
        bits = rng.integers(0, 2, 50)
        assert len(lc.manchester_encode(bits)) == 100
        assert len(lc.fm0_encode(bits)) == 100
        assert len(lc.mms_encode(bits, 8)) == 50 * 16
        assert len(lc.pie_encode(bits)) == int(np.sum(np.where(bits == 0, 2, 4)))
