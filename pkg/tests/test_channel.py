import numpy as np
import pytest

from aiotphy import channel as ch
from aiotphy.errors import RateMismatch
from aiotphy.signals import SampleWaveform


class TestRealize:
    def test_awgn_unit_tap(self):
        r = ch.realize(ch.ChannelProfile.AWGN)
        assert r.delays.tolist() == [0.0]
        assert r.gains.tolist() == [1.0 + 0.0j]

    def test_tdla_normalization_monte_carlo(self):
        rng = np.random.default_rng(51)
        total = 0.0
        n = 100_000
        for _ in range(n):
            r = ch.realize(ch.ChannelProfile.TDL_A, 30e-9, rng=rng)
            total += np.sum(np.abs(r.gains) ** 2)
        assert total / n == pytest.approx(1.0, rel=0.01)

    def test_independent_seeds(self):
        a = np.array([
            ch.realize(ch.ChannelProfile.TDL_A, 30e-9,
                       rng=np.random.default_rng(1000 + i)).gains[1]
            for i in range(10_000)
        ])
        b = np.array([
            ch.realize(ch.ChannelProfile.TDL_A, 30e-9,
                       rng=np.random.default_rng(90_000 + i)).gains[1]
            for i in range(10_000)
        ])
        corr = np.abs(np.mean(a * np.conj(b))) / (np.std(a) * np.std(b))
        assert corr < 0.05

    def test_delays_scale_with_spread(self):
        rng = np.random.default_rng(52)
        r = ch.realize(ch.ChannelProfile.TDL_A, 30e-9, rng=rng)
        assert r.delays.max() == pytest.approx(9.6586 * 30e-9)


class TestCascade:
    def test_identity(self):
        x = SampleWaveform(np.exp(1j * np.linspace(0, 3, 50)), 1e6)
        unit = ch.realize(ch.ChannelProfile.AWGN)
        y = ch.backscatter_cascade(x, unit, unit, ch.CascadeConfig())
        assert np.allclose(y.samples, x.samples)

    def test_flat_gains_multiply(self):
        x = SampleWaveform(np.ones(20, dtype=complex), 1e6)
        g1 = ch.ChannelRealization(np.zeros(1), np.array([0.5 - 0.5j]), ch.ChannelProfile.AWGN)
        g2 = ch.ChannelRealization(np.zeros(1), np.array([-2j]), ch.ChannelProfile.AWGN)
        y = ch.backscatter_cascade(x, g1, g2, ch.CascadeConfig())
        assert np.allclose(y.samples, (0.5 - 0.5j) * (-2j))

    def test_linear_in_coeffs(self):
        rng = np.random.default_rng(53)
        h1 = ch.realize(ch.ChannelProfile.TDL_A, 30e-9, rng=rng)
        h2 = ch.realize(ch.ChannelProfile.TDL_A, 30e-9, rng=rng)
        fs = 3.84e6
        a = SampleWaveform(rng.standard_normal(100) + 0j, fs)
        b = SampleWaveform(rng.standard_normal(100) + 0j, fs)
        cfg = ch.CascadeConfig()
        ya = ch.backscatter_cascade(a, h1, h2, cfg).samples
        yb = ch.backscatter_cascade(b, h1, h2, cfg).samples
        both = SampleWaveform(2.0 * a.samples + 3.0 * b.samples, fs)
        yab = ch.backscatter_cascade(both, h1, h2, cfg).samples
        assert np.allclose(yab, 2.0 * ya + 3.0 * yb)

    def test_double_rayleigh_heavier_tail_than_rayleigh(self):
        rng = np.random.default_rng(54)
        n = 20_000
        g1 = (rng.standard_normal(n) + 1j * rng.standard_normal(n)) / np.sqrt(2)
        g2 = (rng.standard_normal(n) + 1j * rng.standard_normal(n)) / np.sqrt(2)
        double = np.abs(g1 * g2)
        single = np.abs(g1)
        # at low quantiles the cascade fades deeper
        for q in (0.01, 0.05, 0.1):
            assert np.quantile(double, q) < np.quantile(single, q)

    def test_cw_leak_component_power(self):
        x = SampleWaveform(np.ones(1000, dtype=complex), 1e6)
        unit = ch.realize(ch.ChannelProfile.AWGN)
        leaky = ch.CascadeConfig(cw_leak_db=-10.0)
        y = ch.backscatter_cascade(x, unit, unit, leaky, rng=np.random.default_rng(1))
        leak = y.samples - x.samples
        assert np.mean(np.abs(leak) ** 2) == pytest.approx(0.1, rel=1e-6)


class TestSuperpose:
    def test_single_user_identity(self):
        rng = np.random.default_rng(55)
        x = SampleWaveform(rng.standard_normal(64) + 0j, 1e6)
        h = (ch.realize(ch.ChannelProfile.AWGN), ch.realize(ch.ChannelProfile.AWGN))
        y = ch.fdma_superpose([x], [h])
        assert np.allclose(y.samples, x.samples)

    def test_zero_amplitude_user_is_transparent(self):
        rng = np.random.default_rng(56)
        x = SampleWaveform(rng.standard_normal(64) + 0j, 1e6)
        z = SampleWaveform(np.zeros(64, dtype=complex), 1e6)
        h = (ch.realize(ch.ChannelProfile.AWGN), ch.realize(ch.ChannelProfile.AWGN))
        y1 = ch.fdma_superpose([x], [h])
        y2 = ch.fdma_superpose([x, z], [h, h])
        assert np.allclose(y1.samples, y2.samples)

    def test_rate_mismatch(self):
        a = SampleWaveform(np.zeros(8, dtype=complex), 1e6)
        b = SampleWaveform(np.zeros(8, dtype=complex), 2e6)
        h = (ch.realize(ch.ChannelProfile.AWGN), ch.realize(ch.ChannelProfile.AWGN))
        with pytest.raises(RateMismatch):
            ch.fdma_superpose([a, b], [h, h])

    def test_unequal_lengths_zero_padded(self):
        a = SampleWaveform(np.ones(10, dtype=complex), 1e6)
        b = SampleWaveform(np.ones(6, dtype=complex), 1e6)
        h = (ch.realize(ch.ChannelProfile.AWGN), ch.realize(ch.ChannelProfile.AWGN))
        y = ch.fdma_superpose([a, b], [h, h])
        assert len(y) == 10
        assert np.allclose(y.samples[:6], 2.0)
        assert np.allclose(y.samples[6:], 1.0)


class TestAwgn:
    def test_no_noise_flag(self):
        x = SampleWaveform(np.ones(16, dtype=complex), 1e6)
        assert ch.add_awgn(x, None, 1.0) is x
        assert ch.add_awgn(x, np.inf, 1.0) is x

    def test_noise_power_at_0db(self):
        rng = np.random.default_rng(57)
        x = SampleWaveform(np.zeros(1_000_000, dtype=complex), 1e6)
        y = ch.add_awgn(x, 0.0, 1.0, rng)
        assert y.mean_power() == pytest.approx(1.0, rel=0.02)

    def test_moments_are_circular_gaussian(self):
        rng = np.random.default_rng(58)
        x = SampleWaveform(np.zeros(500_000, dtype=complex), 1e6)
        y = ch.add_awgn(x, 3.0, 2.0, rng)
        var = 2.0 / 10 ** 0.3
        assert np.var(y.samples.real) == pytest.approx(var / 2, rel=0.02)
        assert np.var(y.samples.imag) == pytest.approx(var / 2, rel=0.02)
        assert abs(np.mean(y.samples)) < 5e-3
        assert abs(np.mean(y.samples.real * y.samples.imag)) < 5e-3
