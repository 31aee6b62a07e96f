import numpy as np
import pytest

from aiotphy.bits import BitBlock, BitRole, LlrBlock
from aiotphy.codec import (
    NestedCcConfig,
    Termination,
    cc_encode,
    cc_encode_swept,
    get_trellis,
    viterbi_decode,
)
from aiotphy.errors import LengthMismatch


def noiseless_llrs(coded: BitBlock, magnitude=4.0) -> LlrBlock:
    return LlrBlock((1.0 - 2.0 * coded.bits.astype(float)) * magnitude)


def some_configs(termination):
    return [
        NestedCcConfig(7, "a", 2, termination),
        NestedCcConfig(7, "b", 4, termination),
        NestedCcConfig(7, "c", 3, termination),
        NestedCcConfig(6, "a", 2, termination),
        NestedCcConfig(6, "b", 6, termination),
        NestedCcConfig(6, "c", 4, termination),
    ]


class TestNoiseless:
    def test_round_trip_all_configs(self):
        rng = np.random.default_rng(21)
        count = 0
        for term in Termination:
            for cfg in some_configs(term):
                for _ in range(84):
                    msg = BitBlock(rng.integers(0, 2, 48, dtype=np.uint8))
                    decoded, metric = viterbi_decode(noiseless_llrs(cc_encode(msg, cfg)), cfg)
                    assert np.array_equal(decoded.bits, msg.bits)
                    count += 1
        assert count >= 1000

    def test_path_metric_is_sum_of_abs_llr(self):
        rng = np.random.default_rng(22)
        for term in Termination:
            cfg = NestedCcConfig(7, "a", 2, term)
            msg = BitBlock(rng.integers(0, 2, 64, dtype=np.uint8))
            llrs = noiseless_llrs(cc_encode(msg, cfg), magnitude=3.5)
            _, metric = viterbi_decode(llrs, cfg)
            assert metric == pytest.approx(np.abs(llrs.llrs).sum())

    def test_decoded_role_is_message(self):
        cfg = NestedCcConfig(6, "a", 2, Termination.ZERO_TAIL)
        msg = BitBlock(np.ones(16, dtype=np.uint8))
        decoded, _ = viterbi_decode(noiseless_llrs(cc_encode(msg, cfg)), cfg)
        assert decoded.role is BitRole.MESSAGE


class TestHardInput:
    def test_single_flip_corrected_everywhere(self):
        # free distance 10 for K=7 [133,171]: any single flip is correctable
        rng = np.random.default_rng(23)
        cfg = NestedCcConfig(7, "a", 2, Termination.ZERO_TAIL)
        msg = rng.integers(0, 2, 32, dtype=np.uint8)
        coded = cc_encode(BitBlock(msg), cfg).bits
        for i in range(coded.size):
            bad = coded.copy()
            bad[i] ^= 1
            decoded, metric = viterbi_decode(BitBlock(bad, BitRole.CODED), cfg)
            assert np.array_equal(decoded.bits, msg)
            assert metric == 1.0  # Hamming distance of the winning path

    def test_hard_metric_zero_on_clean_input(self):
        cfg = NestedCcConfig(6, "c", 3, Termination.TAIL_BITING)
        msg = np.array([1, 0, 1, 1, 0, 0, 1, 0, 1, 1], dtype=np.uint8)
        coded = cc_encode(BitBlock(msg), cfg)
        decoded, metric = viterbi_decode(BitBlock(coded.bits, BitRole.CODED), cfg)
        assert np.array_equal(decoded.bits, msg)
        assert metric == 0.0


class TestInterleaved:
    def test_swept_input_decodes_after_depermutation(self):
        rng = np.random.default_rng(24)
        for term in Termination:
            cfg = NestedCcConfig(6, "b", 4, term)
            msg = BitBlock(rng.integers(0, 2, 40, dtype=np.uint8))
            swept = cc_encode_swept(msg, cfg)
            decoded, _ = viterbi_decode(noiseless_llrs(swept), cfg, interleaved=True)
            assert np.array_equal(decoded.bits, msg.bits)


class TestTailBiting:
    def test_wava_matches_exhaustive_on_noisy_blocks(self):
        rng = np.random.default_rng(25)
        cfg = NestedCcConfig(7, "a", 2, Termination.TAIL_BITING)
        agreements = 0
        for _ in range(40):
            msg = BitBlock(rng.integers(0, 2, 32, dtype=np.uint8))
            clean = 1.0 - 2.0 * cc_encode(msg, cfg).bits.astype(float)
            noisy = LlrBlock(2.0 * (clean + rng.normal(0, 0.55, clean.size)))
            d_wava, _ = viterbi_decode(noisy, cfg)
            d_ref, _ = viterbi_decode(noisy, cfg, tb_exhaustive=True)
            agreements += int(np.array_equal(d_wava.bits, d_ref.bits))
        assert agreements >= 38  # WAVA is near-ML, not exactly ML

    def test_exhaustive_reference_noiseless(self):
        rng = np.random.default_rng(26)
        cfg = NestedCcConfig(6, "a", 4, Termination.TAIL_BITING)
        msg = BitBlock(rng.integers(0, 2, 24, dtype=np.uint8))
        decoded, _ = viterbi_decode(
            noiseless_llrs(cc_encode(msg, cfg)), cfg, tb_exhaustive=True
        )
        assert np.array_equal(decoded.bits, msg.bits)


class TestStructure:
    def test_state_counts(self):
        # half the decoding work for K=6 at the state-count level
        assert get_trellis(NestedCcConfig(6, "a", 2)).n_states == 32
        assert get_trellis(NestedCcConfig(7, "a", 2)).n_states == 64

    def test_length_mismatch(self):
        cfg = NestedCcConfig(7, "a", 2, Termination.ZERO_TAIL)
        with pytest.raises(LengthMismatch):
            viterbi_decode(LlrBlock(np.ones(31)), cfg)
