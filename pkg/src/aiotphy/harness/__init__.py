from .config import Experiment, ExperimentConfig, config_from_dict, load_config, validate_config
from .runner import (
    BlerRecord,
    CSV_FIELDS,
    format_csv,
    interpolate_required_snr,
    isotonic_decreasing,
    read_csv,
    run_experiment,
    snr_gap,
    write_csv,
    write_waveform_dump,
)
from .schemes import build_pipeline, trial_rng

__all__ = [
    "Experiment", "ExperimentConfig", "config_from_dict", "load_config",
    "validate_config", "BlerRecord", "CSV_FIELDS", "format_csv",
    "interpolate_required_snr", "isotonic_decreasing", "read_csv",
    "run_experiment", "snr_gap", "write_csv", "write_waveform_dump",
    "build_pipeline", "trial_rng",
]
