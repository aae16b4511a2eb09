"""Matrix factorization models for collaborative filtering, with a
reproducible k-fold evaluation harness and quality metrics."""

from .data import (
    DatasetError,
    DatasetFormat,
    FORMAT_PRESETS,
    FoldSplit,
    RatingDataset,
    ScoreScale,
    dataset_stats,
    global_mean,
    kfold_split,
    load_ratings,
)
from .models import DivergenceError, ModelConfig, fit, load_model, save_model

__version__ = "0.1.0"

__all__ = [
    "DatasetError",
    "DatasetFormat",
    "FORMAT_PRESETS",
    "FoldSplit",
    "RatingDataset",
    "ScoreScale",
    "dataset_stats",
    "global_mean",
    "kfold_split",
    "load_ratings",
    "DivergenceError",
    "ModelConfig",
    "fit",
    "load_model",
    "save_model",
    "__version__",
]
