"""Histogram-based leaf-wise gradient-boosted regression trees."""

from .model import (
    BoostedModel,
    Tree,
    load_model,
    model_from_dict,
    model_to_dict,
    predict,
    save_model,
)
from .params import (
    BOOSTING_TYPES,
    DART_DROP_RATE,
    GOSS_OTHER_RATE,
    GOSS_TOP_RATE,
    INT_PARAMS,
    MAX_DEPTH_CHOICES,
    N_BINS,
    RANGES,
    HyperParams,
)
from .train import dart_drop, fit, sample_rows_goss

__all__ = [
    "BOOSTING_TYPES",
    "BoostedModel",
    "DART_DROP_RATE",
    "GOSS_OTHER_RATE",
    "GOSS_TOP_RATE",
    "HyperParams",
    "INT_PARAMS",
    "MAX_DEPTH_CHOICES",
    "N_BINS",
    "RANGES",
    "Tree",
    "dart_drop",
    "fit",
    "load_model",
    "model_from_dict",
    "model_to_dict",
    "predict",
    "sample_rows_goss",
    "save_model",
]
