"""Experiment configuration: TOML-like files, defaults, validation.

The accepted grammar is plain TOML restricted to scalars, lists and one level
of tables; every key below has a default except `schemes` and `snr_db`.
Validation raises ConfigInvalid naming the offending key.
"""

from __future__ import annotations

import sys
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from ..codec import NestedCcConfig, Termination
from ..channel import ChannelProfile, Topology
from ..errors import ConfigInvalid


class Experiment(Enum):
    CC_AWGN = "cc_awgn"
    PDRCH_FADING = "pdrch_fading"
    FDMA_SFO = "fdma_sfo"
    CUSTOM = "custom"


_DEFAULTS = {
    "experiment": "custom",
    "info_bits": 128,
    "seed": 1,
    "min_block_errors": 20,
    "max_trials": 1000,
    "chunk": 0,  # 0 = per-experiment default
    "swept_interleaving": False,
    "cc": {
        "constraint_length": 7,
        "option": "a",
        "rate_index": 2,
        "termination": "tail_biting",
    },
    "crc": {"enabled": False, "variant": "nr_based", "length": 16},
    "d2r": {
        "scheme": "square_bpsk",
        "f_shift_hz": 240e3,
        "bit_rate": 60e3,
        "backscatter": "psk",
    },
    "channel": {
        "profile": "tdla",
        "delay_spread_ns": 30.0,
        "speed_kmh": 3.0,
        "topology": "monostatic",
        "cw_leak_db": "off",
    },
    "rx": {"mode": "coherent_soft", "harmonics": [1], "filter_bw_hz": 0.0},
    "fdma": {"users": 4, "f1_hz": 60e3},
    "sfo": {"ppm": 0.0},
}


@dataclass
class ExperimentConfig:
    experiment: Experiment
    schemes: list
    snr_grid: list
    info_bits: int
    seed: int
    min_block_errors: int
    max_trials: int
    chunk: int
    swept_interleaving: bool
    cc: dict
    crc: dict
    d2r: dict
    channel: dict
    rx: dict
    fdma: dict
    sfo: dict
    raw: dict = field(default_factory=dict, repr=False)

    def cc_config(self) -> NestedCcConfig:
        term = {
            "tail_biting": Termination.TAIL_BITING,
            "zero_tail": Termination.ZERO_TAIL,
        }[self.cc["termination"]]
        return NestedCcConfig(
            self.cc["constraint_length"], self.cc["option"], self.cc["rate_index"], term
        )

    def channel_profile(self) -> ChannelProfile:
        return {"awgn": ChannelProfile.AWGN, "tdla": ChannelProfile.TDL_A}[
            self.channel["profile"]
        ]

    def delay_spread_s(self) -> float:
        return self.channel["delay_spread_ns"] * 1e-9


def _merge(defaults, overrides, prefix, errors):
    out = {}
    for key, dval in defaults.items():
        if isinstance(dval, dict):
            sub = overrides.get(key, {})
            if not isinstance(sub, dict):
                errors.append((f"{prefix}{key}", "expected a table"))
                sub = {}
            out[key] = _merge(dval, sub, f"{prefix}{key}.", errors)
        else:
            out[key] = overrides.get(key, dval)
    for key in overrides:
        if key not in defaults and key not in ("schemes", "snr_db"):
            errors.append((f"{prefix}{key}", "unknown key"))
    return out


def load_config(path) -> ExperimentConfig:
    with open(path, "rb") as fh:
        data = tomllib.load(fh)
    return config_from_dict(data)


def config_from_dict(data: dict) -> ExperimentConfig:
    errors = []
    merged = _merge(_DEFAULTS, data, "", errors)
    if errors:
        key, msg = errors[0]
        raise ConfigInvalid(key, msg)

    try:
        experiment = Experiment(merged["experiment"])
    except ValueError:
        raise ConfigInvalid("experiment", f"unknown experiment {merged['experiment']!r}")

    schemes = data.get("schemes")
    if not schemes or not isinstance(schemes, list):
        raise ConfigInvalid("schemes", "a non-empty scheme list is required")
    snr_grid = data.get("snr_db")
    if not snr_grid or not isinstance(snr_grid, list):
        raise ConfigInvalid("snr_db", "a non-empty SNR grid is required")
    snr_grid = [float(s) for s in snr_grid]
    if any(b <= a for a, b in zip(snr_grid, snr_grid[1:])):
        raise ConfigInvalid("snr_db", "SNR grid must be strictly increasing")

    cfg = ExperimentConfig(
        experiment=experiment,
        schemes=list(schemes),
        snr_grid=snr_grid,
        info_bits=int(merged["info_bits"]),
        seed=int(merged["seed"]),
        min_block_errors=int(merged["min_block_errors"]),
        max_trials=int(merged["max_trials"]),
        chunk=int(merged["chunk"]),
        swept_interleaving=bool(merged["swept_interleaving"]),
        cc=merged["cc"],
        crc=merged["crc"],
        d2r=merged["d2r"],
        channel=merged["channel"],
        rx=merged["rx"],
        fdma=merged["fdma"],
        sfo=merged["sfo"],
        raw=data,
    )
    validate_config(cfg)
    return cfg


def validate_config(cfg: ExperimentConfig):
    if cfg.info_bits < 8:
        raise ConfigInvalid("info_bits", "need at least 8 information bits")
    if cfg.min_block_errors < 20:
        raise ConfigInvalid("min_block_errors", "reported points need >= 20 block errors")
    if cfg.max_trials < cfg.min_block_errors:
        raise ConfigInvalid("max_trials", "must allow at least min_block_errors trials")

    cc = cfg.cc
    if cc["constraint_length"] not in (6, 7):
        raise ConfigInvalid("cc.constraint_length", "must be 6 or 7")
    if cc["option"] not in ("a", "b", "c"):
        raise ConfigInvalid("cc.option", "must be a/b/c")
    try:
        cfg.cc_config()
    except ValueError as exc:
        raise ConfigInvalid("cc.rate_index", str(exc))

    if cfg.crc["enabled"] and cfg.crc["length"] not in (6, 11, 16):
        raise ConfigInvalid("crc.length", "supported lengths are 6, 11, 16")
    if cfg.crc["variant"] not in ("nr_based", "new_search"):
        raise ConfigInvalid("crc.variant", "must be nr_based or new_search")

    if cfg.channel["profile"] not in ("awgn", "tdla"):
        raise ConfigInvalid("channel.profile", "must be awgn or tdla")
    if cfg.channel["topology"] not in ("monostatic", "bistatic"):
        raise ConfigInvalid("channel.topology", "must be monostatic or bistatic")
    leak = cfg.channel["cw_leak_db"]
    if leak != "off" and not isinstance(leak, (int, float)):
        raise ConfigInvalid("channel.cw_leak_db", "must be 'off' or a dB value")

    for k in cfg.rx["harmonics"]:
        if int(k) < 1 or int(k) % 2 == 0:
            raise ConfigInvalid("rx.harmonics", f"harmonics must be positive odd, got {k}")
    if cfg.rx["mode"] not in ("coherent_soft", "noncoherent_hard"):
        raise ConfigInvalid("rx.mode", "must be coherent_soft or noncoherent_hard")

    if cfg.d2r["backscatter"] not in ("ask", "psk"):
        raise ConfigInvalid("d2r.backscatter", "must be ask or psk")
    if cfg.d2r["f_shift_hz"] <= 0 or cfg.d2r["bit_rate"] <= 0:
        raise ConfigInvalid("d2r.f_shift_hz", "frequencies and rates must be positive")

    if cfg.fdma["users"] < 1:
        raise ConfigInvalid("fdma.users", "need at least one user")
    if cfg.sfo["ppm"] < 0:
        raise ConfigInvalid("sfo.ppm", "SFO magnitude bound cannot be negative")

    from .schemes import check_scheme_labels  # local import to avoid a cycle
    check_scheme_labels(cfg)
