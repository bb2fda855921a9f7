"""Pool-per-round active learning schedules for regression."""

from ._alsched import (
    ConfigError,
    Error,
    SynthConfig,
    asd,
    auc,
    ftc,
    importance,
    label_draws,
    log_auc,
    mse,
    paired_ttest_log,
    run,
    select,
    synth,
    synth_files,
    wasd,
)

__all__ = [
    "ConfigError",
    "Error",
    "SynthConfig",
    "asd",
    "auc",
    "ftc",
    "importance",
    "label_draws",
    "log_auc",
    "mse",
    "paired_ttest_log",
    "run",
    "select",
    "synth",
    "synth_files",
    "wasd",
]
