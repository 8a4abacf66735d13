"""Just-in-time defect identification, classification and single-statement
repair for Java functions."""
from __future__ import annotations

from .config import ConfigError, ModelConfig, TrainConfig, load_config
from .labels import DefectLabel
from .model import CompDefectModel, Prediction
from .triples import FunctionTriple, read_jsonl, write_jsonl

__version__ = "0.1.0"

__all__ = [
    "CompDefectModel",
    "ConfigError",
    "DefectLabel",
    "FunctionTriple",
    "ModelConfig",
    "Prediction",
    "TrainConfig",
    "load_config",
    "read_jsonl",
    "write_jsonl",
]
