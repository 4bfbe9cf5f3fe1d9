"""Ensemble feature importance with crisp and fuzzy decision fusion."""

from .data import Dataset, load_csv, load_iris, normalize, synthetic_data
from .explain import ImportanceTensor, compute_tensor
from .fuse_crisp import METHODS, fuse
from .fuse_fuzzy import fuzzy_report
from .models import ModelSpec, grid_search, train
from .pipeline import RunConfig, fuse_only, run_pipeline

__version__ = "0.1.0"

__all__ = [
    "Dataset",
    "ImportanceTensor",
    "METHODS",
    "ModelSpec",
    "RunConfig",
    "compute_tensor",
    "fuse",
    "fuse_only",
    "fuzzy_report",
    "grid_search",
    "load_csv",
    "load_iris",
    "normalize",
    "run_pipeline",
    "synthetic_data",
    "train",
]
