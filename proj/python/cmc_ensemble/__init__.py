"""Co-multistage ensembles (CMC, CMC-M) for imbalanced multiclass classification."""

from ._cmc_ensemble import (
    ClassStats,
    ConfigError,
    DataError,
    Dataset,
    Model,
    TrainingError,
    fit,
    g_mean,
    macro_f1,
    run_experiment,
    sg_mean,
)

__all__ = [
    "ClassStats",
    "ConfigError",
    "DataError",
    "Dataset",
    "Model",
    "TrainingError",
    "fit",
    "g_mean",
    "macro_f1",
    "run_experiment",
    "sg_mean",
]
