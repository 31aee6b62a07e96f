"""Monte-Carlo BLER experiment driver and result persistence.

One BlerRecord per (scheme, SNR) point. Each point repeats fixed-size chunks
until min_block_errors is collected or max_trials is reached; chunk sizes and
per-trial seeds depend only on the config, so the CSV content is identical
for any worker count. wall_seconds is written as 0.0 unless timing is
requested (real timings would break byte-reproducibility).
"""

from __future__ import annotations

import csv
import io
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from ..errors import TargetNotBracketed
from .config import Experiment, ExperimentConfig
from .schemes import build_pipeline

CSV_FIELDS = (
    "experiment", "scheme_label", "snr_db", "trials", "block_errors",
    "bler", "wall_seconds", "seed", "snr_def",
)

_DEFAULT_CHUNK = {
    Experiment.CC_AWGN: 512,
    Experiment.PDRCH_FADING: 128,
    Experiment.CUSTOM: 128,
    Experiment.FDMA_SFO: 16,
}


@dataclass(frozen=True)
class BlerRecord:
    experiment: str
    scheme_label: str
    snr_db: float
    trials: int
    block_errors: int
    bler: float
    wall_seconds: float
    seed: int
    snr_def: str


def _chunk_size(cfg: ExperimentConfig) -> int:
    return cfg.chunk if cfg.chunk > 0 else _DEFAULT_CHUNK[cfg.experiment]


def _run_point(cfg: ExperimentConfig, label: str, snr_idx: int):
    """Adaptive chunk loop for one (scheme, SNR) point."""
    pipeline = build_pipeline(cfg, label)
    snr_db = cfg.snr_grid[snr_idx]
    chunk = _chunk_size(cfg)
    bpt = pipeline.blocks_per_trial
    t0 = time.perf_counter()
    blocks = errors = 0
    start_trial = 0
    while errors < cfg.min_block_errors and blocks + bpt <= cfg.max_trials:
        room = (cfg.max_trials - blocks) // bpt
        n = min(chunk, room)
        got_blocks, got_errors = pipeline.run_chunk(snr_db, snr_idx, start_trial, n)
        blocks += got_blocks
        errors += got_errors
        start_trial += n
    wall = time.perf_counter() - t0
    return label, snr_idx, blocks, errors, wall


def run_experiment(cfg: ExperimentConfig, workers: int = 1,
                   timing: str = "none", log=None) -> list:
    """Run every (scheme, SNR) point; returns records in deterministic order."""
    points = [(label, i) for label in cfg.schemes for i in range(len(cfg.snr_grid))]
    results = {}
    if workers and workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            futures = [pool.submit(_run_point, cfg, label, i) for label, i in points]
            for fut in futures:
                label, i, blocks, errors, wall = fut.result()
                results[(label, i)] = (blocks, errors, wall)
                if log:
                    log(f"{label} @ {cfg.snr_grid[i]:+.2f} dB: "
                        f"{errors}/{blocks} block errors")
    else:
        for label, i in points:
            label, i, blocks, errors, wall = _run_point(cfg, label, i)
            results[(label, i)] = (blocks, errors, wall)
            if log:
                log(f"{label} @ {cfg.snr_grid[i]:+.2f} dB: "
                    f"{errors}/{blocks} block errors")

    records = []
    for label in cfg.schemes:
        pipeline_note = getattr(build_pipeline(cfg, label), "snr_definition",
                                "inband_snr_bref_2x_bitrate")
        for i, snr in enumerate(cfg.snr_grid):
            blocks, errors, wall = results[(label, i)]
            records.append(BlerRecord(
                experiment=cfg.experiment.value,
                scheme_label=label,
                snr_db=snr,
                trials=blocks,
                block_errors=errors,
                bler=errors / blocks if blocks else 0.0,
                wall_seconds=wall if timing == "wall" else 0.0,
                seed=cfg.seed,
                snr_def=pipeline_note,
            ))
    return records


def format_csv(records) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_FIELDS)
    for r in records:
        writer.writerow([
            r.experiment, r.scheme_label, f"{r.snr_db:.6g}", r.trials,
            r.block_errors, f"{r.bler:.6g}", f"{r.wall_seconds:.6g}",
            r.seed, r.snr_def,
        ])
    return buf.getvalue()


def write_csv(records, path):
    with open(path, "w", newline="") as fh:
        fh.write(format_csv(records))


def read_csv(path) -> list:
    records = []
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        missing = set(CSV_FIELDS) - set(reader.fieldnames or ())
        if missing:
            raise ValueError(f"CSV missing fields: {sorted(missing)}")
        for row in reader:
            records.append(BlerRecord(
                experiment=row["experiment"],
                scheme_label=row["scheme_label"],
                snr_db=float(row["snr_db"]),
                trials=int(row["trials"]),
                block_errors=int(row["block_errors"]),
                bler=float(row["bler"]),
                wall_seconds=float(row["wall_seconds"]),
                seed=int(row["seed"]),
                snr_def=row["snr_def"],
            ))
    return records


def isotonic_decreasing(values, weights) -> np.ndarray:
    """Weighted least-squares fit under a non-increasing constraint (PAVA)."""
    vals, wts, counts = [], [], []
    for v, w in zip(values, weights):
        vals.append(float(v))
        wts.append(float(w))
        counts.append(1)
        while len(vals) > 1 and vals[-2] < vals[-1]:
            merged = (vals[-1] * wts[-1] + vals[-2] * wts[-2]) / (wts[-1] + wts[-2])
            wts[-2] += wts[-1]
            counts[-2] += counts[-1]
            vals[-2] = merged
            del vals[-1], wts[-1], counts[-1]
    out = []
    for v, c in zip(vals, counts):
        out.extend([v] * c)
    return np.array(out)


def interpolate_required_snr(records, target_bler: float) -> float:
    """SNR at which the isotonic-fitted curve crosses target_bler (log-linear).

    Zero-BLER points are clamped to half an error in their trial count so the
    log interpolation stays finite.
    """
    recs = sorted(records, key=lambda r: r.snr_db)
    if len(recs) < 2:
        raise TargetNotBracketed("need at least two records")
    snrs = np.array([r.snr_db for r in recs])
    weights = [max(r.trials, 1) for r in recs]
    fitted = isotonic_decreasing([r.bler for r in recs], weights)
    clamp = np.array([0.5 / max(r.trials, 1) for r in recs])
    fitted = isotonic_decreasing(np.maximum(fitted, clamp), weights)
    if target_bler > fitted[0] or target_bler < fitted[-1]:
        raise TargetNotBracketed(
            f"target {target_bler} outside measured range [{fitted[-1]:.3g}, {fitted[0]:.3g}]"
        )
    j = int(np.argmax(fitted <= target_bler))
    if j == 0 or fitted[j] == target_bler:
        return float(snrs[j])
    i = j - 1  # first crossing: fitted[i] > target >= fitted[j]
    lt, li, lj = np.log(target_bler), np.log(fitted[i]), np.log(fitted[j])
    frac = (lt - li) / (lj - li)
    return float(snrs[i] + (snrs[j] - snrs[i]) * frac)


def snr_gap(records, label_a: str, label_b: str, target_bler: float) -> float:
    """Required-SNR difference (label_b minus label_a) at the target BLER."""
    a = [r for r in records if r.scheme_label == label_a]
    b = [r for r in records if r.scheme_label == label_b]
    if not a or not b:
        raise ValueError(f"labels {label_a!r}/{label_b!r} not found in records")
    return interpolate_required_snr(b, target_bler) - interpolate_required_snr(a, target_bler)


def write_waveform_dump(wave, path):
    """Dump format consumed by the plotting tool: header then re,im lines."""
    with open(path, "w") as fh:
        fh.write(f"sample_rate={wave.sample_rate:.10g}\n")
        for s in wave.samples:
            fh.write(f"{s.real:.10g},{s.imag:.10g}\n")
