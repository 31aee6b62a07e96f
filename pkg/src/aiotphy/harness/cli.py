"""Command-line interface.

Subcommands: run, presets, validate, gap, dump. Exit codes: 0 success,
2 config error (the offending key goes to stderr), 3 unbracketed gap target.
"""

from __future__ import annotations

import argparse
import sys
from importlib import resources

import numpy as np

from ..errors import ConfigInvalid, TargetNotBracketed
from .config import config_from_dict, load_config
from .runner import (
    interpolate_required_snr,
    read_csv,
    run_experiment,
    snr_gap,
    write_csv,
    write_waveform_dump,
)


def _preset_dir():
    return resources.files("aiotphy.harness") / "presets"


def preset_names():
    return sorted(p.name[:-5] for p in _preset_dir().iterdir() if p.name.endswith(".toml"))


def preset_path(name: str):
    path = _preset_dir() / f"{name}.toml"
    if not path.is_file():
        raise FileNotFoundError(f"no preset named {name!r}; have {preset_names()}")
    return path


def _load(path_arg: str):
    # bare preset names resolve to the shipped preset files
    if not path_arg.endswith(".toml") and "/" not in path_arg:
        return load_config(preset_path(path_arg))
    return load_config(path_arg)


def _cmd_run(args) -> int:
    try:
        cfg = _load(args.config)
        if args.seed is not None:
            cfg.seed = args.seed
    except ConfigInvalid as exc:
        print(f"config error at {exc.key}: {exc}", file=sys.stderr)
        return 2
    except FileNotFoundError as exc:
        print(str(exc), file=sys.stderr)
        return 2
    log = (lambda msg: print(msg, file=sys.stderr)) if args.verbose else None
    records = run_experiment(cfg, workers=args.workers, timing=args.timing, log=log)
    write_csv(records, args.out)
    print(f"wrote {len(records)} records to {args.out}")
    return 0


def _cmd_presets(args) -> int:
    if args.action == "list":
        for name in preset_names():
            print(name)
        return 0
    print(preset_path(args.name))
    return 0


def _cmd_validate(args) -> int:
    try:
        _load(args.config)
    except ConfigInvalid as exc:
        print(f"config error at {exc.key}: {exc}", file=sys.stderr)
        return 2
    except FileNotFoundError as exc:
        print(str(exc), file=sys.stderr)
        return 2
    print("ok")
    return 0


def _cmd_gap(args) -> int:
    records = read_csv(args.csv)
    try:
        gap = snr_gap(records, args.a, args.b, args.bler)
    except TargetNotBracketed as exc:
        print(f"gap target not bracketed: {exc}", file=sys.stderr)
        return 3
    except ValueError as exc:
        print(str(exc), file=sys.stderr)
        return 2
    print(f"{gap:.4f} dB")
    return 0


def _cmd_dump(args) -> int:
    """Write one clean modulated waveform in the documented dump format."""
    try:
        cfg = _load(args.config)
    except ConfigInvalid as exc:
        print(f"config error at {exc.key}: {exc}", file=sys.stderr)
        return 2
    from .schemes import build_pipeline, trial_rng, _prepare_message
    from ..modem_d2r import backscatter_apply
    from ..channel import fdma_superpose, realize, ChannelProfile, CascadeConfig

    label = args.scheme or cfg.schemes[0]
    pipeline = build_pipeline(cfg, label)
    rng = trial_rng(cfg.seed if args.seed is None else args.seed, 0, 0)

    if hasattr(pipeline, "freqs"):  # FDMA: superpose ideal-channel users
        waves = []
        for scheme in pipeline.schemes:
            bits = rng.integers(0, 2, args.bits, dtype=np.uint8)
            from ..modem_d2r import square_modulate
            waves.append(backscatter_apply(
                square_modulate(bits, scheme), pipeline.bmap, pipeline.fs))
        unit = realize(ChannelProfile.AWGN)
        wave = fdma_superpose(waves, [(unit, unit)] * len(waves), CascadeConfig())
    elif hasattr(pipeline, "_modulate"):
        bits = rng.integers(0, 2, args.bits, dtype=np.uint8)
        wave = backscatter_apply(pipeline._modulate(bits), pipeline.bmap, pipeline.fs)
    else:
        print(f"scheme {label!r} has no waveform to dump", file=sys.stderr)
        return 2
    write_waveform_dump(wave, args.out)
    print(f"wrote {len(wave)} samples at {wave.sample_rate:.6g} Hz to {args.out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="aiotphy", description="A-IoT link-level BLER experiments"
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run an experiment config or preset")
    p_run.add_argument("config", help="config file path or preset name")
    p_run.add_argument("--out", default="results.csv")
    p_run.add_argument("--seed", type=int, default=None)
    p_run.add_argument("--workers", type=int, default=1)
    p_run.add_argument("--timing", choices=("none", "wall"), default="none")
    p_run.add_argument("--verbose", action="store_true")
    p_run.set_defaults(func=_cmd_run)

    p_presets = sub.add_parser("presets", help="list shipped presets")
    p_presets.add_argument("action", choices=("list", "path"))
    p_presets.add_argument("name", nargs="?")
    p_presets.set_defaults(func=_cmd_presets)

    p_val = sub.add_parser("validate", help="validate a config file")
    p_val.add_argument("config")
    p_val.set_defaults(func=_cmd_validate)

    p_gap = sub.add_parser("gap", help="SNR gap between two curves at a BLER")
    p_gap.add_argument("csv")
    p_gap.add_argument("--a", required=True)
    p_gap.add_argument("--b", required=True)
    p_gap.add_argument("--bler", type=float, default=0.1)
    p_gap.set_defaults(func=_cmd_gap)

    p_dump = sub.add_parser("dump", help="dump a clean modulated waveform")
    p_dump.add_argument("config")
    p_dump.add_argument("--scheme", default=None)
    p_dump.add_argument("--out", default="waveform.txt")
    p_dump.add_argument("--bits", type=int, default=256)
    p_dump.add_argument("--seed", type=int, default=None)
    p_dump.set_defaults(func=_cmd_dump)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
