"""Detect cloned social-media accounts among pairs of look-alike profiles."""

from .dataset import AccountProfile, Dataset, DatasetError, ingest, load_dataset_dir
from .pipeline import (
    EvaluationReport,
    ModelBundle,
    PipelineConfig,
    Prediction,
    evaluate,
    load_bundle,
    predict_pipeline,
    save_bundle,
    train_pipeline,
)

__version__ = "0.1.0"

__all__ = [
    "AccountProfile",
    "Dataset",
    "DatasetError",
    "EvaluationReport",
    "ModelBundle",
    "PipelineConfig",
    "Prediction",
    "evaluate",
    "ingest",
    "load_bundle",
    "load_dataset_dir",
    "predict_pipeline",
    "save_bundle",
    "train_pipeline",
]
