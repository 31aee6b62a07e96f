"""Per-scheme trial pipelines for the Monte-Carlo harness.

A pipeline turns (snr, trial index range) into block-error counts. Trial
randomness comes from SeedSequence((seed, snr_index, trial_index)) so results
are independent of worker count and chunk size, and schemes share channel,
message and noise draws (common random numbers) because the scheme label is
not part of the seed. Decoding is batched per chunk; everything upstream runs
per trial.
"""

from __future__ import annotations

import re

import numpy as np

from ..bits import BitBlock, BitRole
from ..channel import (
    CascadeConfig,
    ChannelProfile,
    add_awgn,
    backscatter_cascade,
    fdma_superpose,
    realize,
)
from ..codec import (
    CrcSpec,
    CrcVariant,
    NestedCcConfig,
    Termination,
    crc_attach,
    deinterleave_swept,
    encode_batch,
)
from ..codec.viterbi import decode_batch
from ..errors import ConfigInvalid
from ..linecode import (
    LineCode,
    LineCodeKind,
    enhanced_manchester_encode,
    fm0_encode,
    mms_encode,
    soft_decode_batch,
)
from ..modem_d2r import (
    BackscatterKind,
    BackscatterMap,
    SquareWaveKind,
    SquareWaveScheme,
    apply_sfo,
    backscatter_apply,
    default_sample_rate,
    fdma_plan,
    SfoModel,
    square_modulate,
)
from ..signals import SampleWaveform
from ..receiver import (
    PerfectCsi,
    ReceiverConfig,
    coherent_halfbit_metrics,
    coherent_llrs,
    noncoherent_bits,
    window_edges,
)

_CC_LABEL = re.compile(r"^k([67])([abc])_r([2-9])$")
_PDRCH_LABEL = re.compile(
    r"^(sq_bpsk|sq_qpsk|sq_ook|sq_msk|enh_manch|fm0|mms2|mms4|mms8)_(coh|noncoh)$"
)
_FDMA_LABEL = re.compile(r"^sfo([0-9.eE+\-]+)$")


def trial_rng(seed: int, snr_idx: int, trial_idx: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence((seed, snr_idx, trial_idx)))


def check_scheme_labels(cfg):
    from .config import Experiment

    for label in cfg.schemes:
        if cfg.experiment is Experiment.CC_AWGN:
            ok = _CC_LABEL.match(label) is not None
        elif cfg.experiment is Experiment.FDMA_SFO:
            ok = _FDMA_LABEL.match(label) is not None
        else:
            m = _PDRCH_LABEL.match(label)
            ok = m is not None and not (
                m.group(2) == "noncoh" and not m.group(1).startswith(("fm0", "mms"))
            )
        if not ok:
            raise ConfigInvalid(
                "schemes", f"label {label!r} is not valid for {cfg.experiment.value}"
            )


def build_pipeline(cfg, label: str):
    from .config import Experiment

    if cfg.experiment is Experiment.CC_AWGN:
        return CcAwgnPipeline(cfg, label)
    if cfg.experiment is Experiment.FDMA_SFO:
        return FdmaSfoPipeline(cfg, label)
    return PdrchPipeline(cfg, label)


def _prepare_message(rng, cfg):
    msg = rng.integers(0, 2, cfg.info_bits, dtype=np.uint8)
    if cfg.crc["enabled"]:
        spec = CrcSpec(CrcVariant(cfg.crc["variant"]))
        block = crc_attach(BitBlock(msg), spec, cfg.crc["length"])
        return msg, block.bits
    return msg, msg


def _tx_length(cfg) -> int:
    return cfg.info_bits + (cfg.crc["length"] if cfg.crc["enabled"] else 0)


class CcAwgnPipeline:
    """Coded BPSK over AWGN, soft Viterbi; SNR is Es/N0 per coded symbol."""

    snr_definition = "es_over_n0_per_coded_symbol"

    def __init__(self, cfg, label: str):
        m = _CC_LABEL.match(label)
        K, opt, n = int(m.group(1)), m.group(2), int(m.group(3))
        term = Termination(cfg.cc["termination"])
        self.cc = NestedCcConfig(K, opt, n, term)
        self.cfg = cfg
        self.label = label
        self.blocks_per_trial = 1

    def run_chunk(self, snr_db: float, snr_idx: int, start_trial: int, n_trials: int):
        cfg = self.cfg
        noiseless = snr_db is None or np.isinf(snr_db)
        var = 1.0 if noiseless else 10.0 ** (-snr_db / 10.0)
        sigma = 0.0 if noiseless else np.sqrt(var / 2.0)
        tx_len = _tx_length(cfg)
        n_coded = self.cc.codeword_length(tx_len)
        msgs = np.empty((n_trials, cfg.info_bits), dtype=np.uint8)
        tx = np.empty((n_trials, tx_len), dtype=np.uint8)
        noise = np.empty((n_trials, n_coded))
        for i in range(n_trials):
            rng = trial_rng(cfg.seed, snr_idx, start_trial + i)
            msg, block = _prepare_message(rng, cfg)
            msgs[i] = msg
            tx[i] = block
            noise[i] = rng.standard_normal(n_coded)
        coded = encode_batch(tx, self.cc)
        symbols = 1.0 - 2.0 * coded.astype(np.float64)
        llrs = 4.0 * (symbols + sigma * noise) / var
        if cfg.swept_interleaving:
            perm_len = n_coded // self.cc.rate_index
            llrs = np.stack([
                deinterleave_swept(row, perm_len, self.cc.rate_index) for row in llrs
            ])
        decoded, _ = decode_batch(llrs, self.cc)
        errors = int(np.any(decoded[:, : cfg.info_bits] != msgs, axis=1).sum())
        return n_trials, errors


class PdrchPipeline:
    """One-user D2R link over the backscatter cascade (waveform level)."""

    def __init__(self, cfg, label: str):
        self.cfg = cfg
        self.label = label
        m = _PDRCH_LABEL.match(label)
        self.wave_name, mode = m.group(1), m.group(2)
        self.coherent = mode == "coh"
        self.cc = cfg.cc_config()
        self.blocks_per_trial = 1

        f = float(cfg.d2r["f_shift_hz"])
        rate = float(cfg.d2r["bit_rate"])
        self.bit_rate = rate
        bmap_kind = BackscatterKind(cfg.d2r["backscatter"])

        if self.wave_name.startswith("sq_"):
            kind = {
                "sq_bpsk": SquareWaveKind.BPSK,
                "sq_qpsk": SquareWaveKind.QPSK,
                "sq_ook": SquareWaveKind.OOK,
                "sq_msk": SquareWaveKind.MSK,
            }[self.wave_name]
            self.scheme = SquareWaveScheme(kind, f, rate)
            if kind is SquareWaveKind.OOK:
                bmap_kind = BackscatterKind.ASK
            if kind is SquareWaveKind.MSK:
                chip_rates = (2 * f, 3 * f)
                f_max = 1.5 * f
            elif kind is SquareWaveKind.QPSK:
                chip_rates = (4 * f,)
                f_max = f
            else:
                chip_rates = (2 * f,)
                f_max = f
            self.kind = self.scheme
            self.p_nominal = 0.25 if kind is SquareWaveKind.OOK else 1.0
        elif self.wave_name == "enh_manch":
            cycles = f / rate
            if abs(cycles - round(cycles)) > 1e-9:
                raise ConfigInvalid("d2r.f_shift_hz", "enh Manchester needs integer cycles/bit")
            self.m_cycles = int(round(cycles))
            # identical waveform to square-BPSK: demodulated through that lane
            self.scheme = SquareWaveScheme(SquareWaveKind.BPSK, f, rate)
            self.kind = self.scheme
            chip_rates = (2 * f,)
            f_max = f
            self.p_nominal = 1.0
        elif self.wave_name == "fm0":
            self.kind = LineCodeKind(LineCode.FM0)
            self.scheme = None
            chip_rates = (2 * rate,)
            f_max = f  # shared sampling policy across the comparison set
            self.p_nominal = 1.0
        else:  # mms2/4/8
            m_cyc = int(self.wave_name[3:])
            self.kind = LineCodeKind(LineCode.MMS, m_cyc)
            self.scheme = None
            chip_rates = (2 * m_cyc * rate,)
            f_max = f
            self.p_nominal = 1.0

        self.bmap = BackscatterMap(bmap_kind)
        self.fs = default_sample_rate(f_max, chip_rates)
        self.b_ref = 2.0 * rate
        self.p_ref_eff = self.p_nominal * self.fs / self.b_ref
        self.rx_cfg = ReceiverConfig(
            harmonics=tuple(int(k) for k in cfg.rx["harmonics"]),
            filter_bw=(cfg.rx["filter_bw_hz"] or 2.0 * rate),
        )
        self.profile = cfg.channel_profile()
        self.spread = cfg.delay_spread_s()
        leak = cfg.channel["cw_leak_db"]
        self.cascade_cfg = CascadeConfig(cw_leak_db=None if leak == "off" else float(leak))

    def _modulate(self, coded_bits: np.ndarray):
        if self.wave_name == "enh_manch":
            return enhanced_manchester_encode(coded_bits, self.m_cycles, self.bit_rate)
        if self.scheme is not None:
            return square_modulate(coded_bits, self.scheme)
        if self.kind.kind is LineCode.FM0:
            return fm0_encode(coded_bits, bit_rate=self.bit_rate)
        return mms_encode(coded_bits, self.kind.subcarrier_cycles, bit_rate=self.bit_rate)

    def run_chunk(self, snr_db: float, snr_idx: int, start_trial: int, n_trials: int):
        cfg = self.cfg
        noiseless = snr_db is None or np.isinf(snr_db)
        var = 1.0 if noiseless else self.p_ref_eff / 10.0 ** (snr_db / 10.0)
        tx_len = _tx_length(cfg)
        n_coded = self.cc.codeword_length(tx_len)
        msgs = np.empty((n_trials, cfg.info_bits), dtype=np.uint8)
        tx = np.empty((n_trials, tx_len), dtype=np.uint8)
        rngs = []
        for i in range(n_trials):
            rng = trial_rng(cfg.seed, snr_idx, start_trial + i)
            msg, block = _prepare_message(rng, cfg)
            msgs[i] = msg
            tx[i] = block
            rngs.append(rng)
        coded_all = encode_batch(tx, self.cc)

        rows = np.empty((n_trials, n_coded))
        half_rows = None
        for i in range(n_trials):
            rng = rngs[i]
            coded = coded_all[i]
            if cfg.swept_interleaving:
                stream_len = n_coded // self.cc.rate_index
                tx_bits = coded.reshape(stream_len, self.cc.rate_index).T.reshape(-1)
            else:
                tx_bits = coded
            chips = self._modulate(tx_bits)
            wave = backscatter_apply(chips, self.bmap, self.fs)
            h1 = realize(self.profile, self.spread, rng=rng)
            h2 = realize(self.profile, self.spread, rng=rng)
            y = backscatter_cascade(wave, h1, h2, self.cascade_cfg, rng=rng)
            y = add_awgn(y, snr_db, self.p_ref_eff, rng)
            csi = PerfectCsi(h1, h2, var, self.fs)

            if isinstance(self.kind, SquareWaveScheme):
                llr = coherent_llrs(y, self.kind, self.rx_cfg, csi, n_coded, self.bit_rate)
                rows[i] = llr.llrs
            else:
                cpb = chips.chips_per_bit
                edges = window_edges(chips, self.fs, cpb // 2)
                if self.coherent:
                    metrics = coherent_halfbit_metrics(y, self.kind, csi, edges)
                    if half_rows is None:
                        half_rows = np.empty((n_trials,) + metrics.shape)
                    half_rows[i] = metrics
                else:
                    hard = noncoherent_bits(y, self.kind, edges)
                    rows[i] = 1.0 - 2.0 * hard.bits.astype(np.float64)

        if half_rows is not None:
            rows = soft_decode_batch(half_rows, self.kind)
        if cfg.swept_interleaving:
            stream_len = n_coded // self.cc.rate_index
            rows = np.stack([
                deinterleave_swept(r, stream_len, self.cc.rate_index) for r in rows
            ])
        decoded, _ = decode_batch(rows, self.cc)
        errors = int(np.any(decoded[:, : cfg.info_bits] != msgs, axis=1).sum())
        return n_trials, errors


class FdmaSfoPipeline:
    """Concurrent even-multiple FDMA users with clock error; counts per-user blocks."""

    def __init__(self, cfg, label: str):
        self.cfg = cfg
        self.label = label
        self.ppm = float(_FDMA_LABEL.match(label).group(1))
        self.cc = cfg.cc_config()
        self.users = int(cfg.fdma["users"])
        rate = float(cfg.d2r["bit_rate"])
        self.bit_rate = rate
        self.freqs = fdma_plan(self.users, float(cfg.fdma["f1_hz"]))
        self.schemes = [
            SquareWaveScheme(SquareWaveKind.BPSK, f, rate) for f in self.freqs
        ]
        chip_rates = tuple(2 * f for f in self.freqs)
        self.fs = default_sample_rate(max(self.freqs), chip_rates)
        self.bmap = BackscatterMap(BackscatterKind.PSK)
        self.b_ref = 2.0 * rate
        self.p_ref_eff = 1.0 * self.fs / self.b_ref  # per-user signal power
        self.rx_cfg = ReceiverConfig(
            harmonics=tuple(int(k) for k in cfg.rx["harmonics"]),
            filter_bw=(cfg.rx["filter_bw_hz"] or 2.0 * rate),
        )
        self.profile = cfg.channel_profile()
        self.spread = cfg.delay_spread_s()
        self.cascade_cfg = CascadeConfig()
        self.sfo = SfoModel(self.ppm)
        self.blocks_per_trial = self.users

    def run_chunk(self, snr_db: float, snr_idx: int, start_trial: int, n_trials: int):
        cfg = self.cfg
        noiseless = snr_db is None or np.isinf(snr_db)
        var = 1.0 if noiseless else self.p_ref_eff / 10.0 ** (snr_db / 10.0)
        tx_len = _tx_length(cfg)
        n_coded = self.cc.codeword_length(tx_len)
        U = self.users
        msgs = np.empty((n_trials * U, cfg.info_bits), dtype=np.uint8)
        rows = np.empty((n_trials * U, n_coded))
        for i in range(n_trials):
            rng = trial_rng(cfg.seed, snr_idx, start_trial + i)
            user_msgs, user_tx, channels = [], [], []
            for u in range(U):
                msg, block = _prepare_message(rng, cfg)
                user_msgs.append(msg)
                user_tx.append(block)
                h1 = realize(self.profile, self.spread, rng=rng)
                h2 = realize(self.profile, self.spread, rng=rng)
                channels.append((h1, h2))
            eps = [self.sfo.draw(rng) for _ in range(U)]
            user_coded = encode_batch(np.stack(user_tx), self.cc)

            waves, chip_objs = [], []
            for u in range(U):
                chips = square_modulate(user_coded[u], self.schemes[u])
                chips = chips.with_stretch(1.0 / (1.0 + eps[u]))
                chip_objs.append(chips)
                wave = backscatter_apply(chips, self.bmap, self.fs)
                # single precision: the FDMA path is memory-bandwidth bound
                waves.append(SampleWaveform(wave.samples.astype(np.complex64), self.fs))
            y = fdma_superpose(waves, channels, self.cascade_cfg)
            nominal_len = n_coded * int(round(self.fs / self.bit_rate))
            if len(y) < nominal_len:  # reader observes the full nominal window
                padded = np.zeros(nominal_len, dtype=y.samples.dtype)
                padded[: len(y)] = y.samples
                y = SampleWaveform(padded, self.fs)
            y = add_awgn(y, snr_db, self.p_ref_eff, rng)

            for u in range(U):
                csi = PerfectCsi(channels[u][0], channels[u][1], var, self.fs)
                # the reader acquires a user's tone only inside its nominal
                # extraction band; a device drifted out of it is lost and the
                # demodulator runs with nominal assumptions
                delta = self.freqs[u] * eps[u]
                if abs(delta) <= self.rx_cfg.filter_bw:
                    f_eff = self.freqs[u] * (1.0 + eps[u])
                    edges = window_edges(chip_objs[u], self.fs,
                                         2 * self.schemes[u].cycles_per_bit)
                else:
                    f_eff = self.freqs[u]
                    edges = None
                llr = coherent_llrs(
                    y, self.schemes[u], self.rx_cfg, csi, n_coded, self.bit_rate,
                    f_eff=f_eff, edges=edges,
                )
                msgs[i * U + u] = user_msgs[u]
                rows[i * U + u] = llr.llrs

        decoded, _ = decode_batch(rows, self.cc)
        errors = int(np.any(decoded[:, : cfg.info_bits] != msgs, axis=1).sum())
        return n_trials * U, errors
