"""featgate: does a block of exogenous indicators earn its place in a
short-horizon return forecaster?

The package ingests daily prices and indicator tables, engineers windowed
features, trains a reimplemented histogram gradient-boosted tree learner,
optimizes hyperparameters and feature subsets with a genetic algorithm, and
compares a Baseline arm (price-derived features only) against an Augmented
arm (indicators allowed) over repeated seeded runs.
"""

__version__ = "0.1.0"

from .booster import (
    BoostedModel,
    HyperParams,
    fit,
    load_model,
    predict,
    save_model,
)
from .config import DEFAULT_INDICATOR_COLUMNS, Config, load_config, parse_config
from .errors import ConfigError, DataError, FeatgateError, IoError
from .experiment import (
    ComparisonReport,
    RunRecord,
    champion_pfi,
    compare_arms,
    emit_report,
    load_records,
    run_experiment,
)
from .featwin import FeatureMatrix, FeatureSpec, apply_fc, build_matrix
from .gaopt import GAConfig, Genome, OptimResult, decode, encode, run_ga
from .ingest import (
    AlignedDataset,
    SplitIndices,
    build_dataset,
    chronological_split,
    export_csv,
    load_aligned_csv,
    load_indicators,
    load_prices,
)
from .metrics import (
    MetricSet,
    PfiEntry,
    UTestResult,
    compute_metrics,
    histogram_overlap,
    mann_whitney_u,
    mann_whitney_u_exact,
    permutation_importance,
)

__all__ = [
    "__version__",
    "FeatgateError",
    "ConfigError",
    "DataError",
    "IoError",
    "Config",
    "DEFAULT_INDICATOR_COLUMNS",
    "load_config",
    "parse_config",
    "load_prices",
    "load_indicators",
    "build_dataset",
    "chronological_split",
    "export_csv",
    "load_aligned_csv",
    "AlignedDataset",
    "SplitIndices",
    "FeatureSpec",
    "FeatureMatrix",
    "apply_fc",
    "build_matrix",
    "HyperParams",
    "BoostedModel",
    "fit",
    "predict",
    "save_model",
    "load_model",
    "MetricSet",
    "PfiEntry",
    "UTestResult",
    "compute_metrics",
    "mann_whitney_u",
    "mann_whitney_u_exact",
    "histogram_overlap",
    "permutation_importance",
    "GAConfig",
    "Genome",
    "OptimResult",
    "encode",
    "decode",
    "run_ga",
    "RunRecord",
    "ComparisonReport",
    "run_experiment",
    "compare_arms",
    "champion_pfi",
    "emit_report",
    "load_records",
]
