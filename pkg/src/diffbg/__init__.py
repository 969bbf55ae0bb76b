"""Background subtraction for video sequences using diffusion bases."""

__version__ = "0.1.0"

from .config import PipelineConfig
from .dbsdb import DynamicBackground, load_model, run_dbsdb, save_model, train_dbsdb
from .errors import DiffBGError, NumericError, ParameterError, SequenceIOError, ShapeError
from .frames import normalize_0_255, to_grayscale
from .masks import dfs_fuse, mask_metrics, mask_or, speckle_removal
from .pipelines import classify_with_model, dbsdb_masks, sbsdb_masks
from .sbsdb import iter_sbsdb, run_sbsdb
from .spectral import extract_background
from .synthetic import gen_synthetic

__all__ = [
    "DiffBGError", "DynamicBackground", "NumericError", "ParameterError", "PipelineConfig",
    "SequenceIOError", "ShapeError", "classify_with_model", "dbsdb_masks", "dfs_fuse",
    "extract_background", "gen_synthetic", "iter_sbsdb", "load_model", "mask_metrics", "mask_or",
    "normalize_0_255", "run_dbsdb", "run_sbsdb", "save_model", "sbsdb_masks", "speckle_removal",
    "to_grayscale", "train_dbsdb",
]
