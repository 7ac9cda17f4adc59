"""Hyperparameter surface of the learner.

RANGES / BOOSTING_TYPES / MAX_DEPTH_CHOICES are the single source of truth:
genome encoding, mutation clamping, and HyperParams validation all read from
here and nowhere else.
"""

from __future__ import annotations

from dataclasses import dataclass, field, fields

from ..errors import ConfigError

BOOSTING_TYPES = ("gbdt", "dart", "goss")
MAX_DEPTH_CHOICES = (-1, 5, 10, 15, 20)  # -1 = unlimited

#: (low, high) inclusive bounds for every scalar hyperparameter.
RANGES = {
    "num_leaves": (1, 100),
    "learning_rate": (0.001, 0.1),
    "n_estimators": (3, 200),
    "subsample": (0.5, 1.0),
    "colsample_bytree": (0.5, 1.0),
    "min_child_samples": (10, 50),
    "reg_alpha": (0.0, 1.0),
    "reg_lambda": (0.0, 1.0),
}

INT_PARAMS = ("num_leaves", "n_estimators", "min_child_samples")

# Variant constants outside the search space.
N_BINS = 255
DART_DROP_RATE = 0.1
GOSS_TOP_RATE = 0.2
GOSS_OTHER_RATE = 0.1


@dataclass(frozen=True)
class HyperParams:
    boosting_type: str = "gbdt"
    num_leaves: int = 31
    max_depth: int = -1
    learning_rate: float = 0.1
    n_estimators: int = 100
    subsample: float = 1.0
    colsample_bytree: float = 1.0
    min_child_samples: int = 20
    reg_alpha: float = 0.0
    reg_lambda: float = 0.0

    def __post_init__(self):
        if self.boosting_type not in BOOSTING_TYPES:
            raise ConfigError(f"boosting_type {self.boosting_type!r} not in {BOOSTING_TYPES}")
        if self.max_depth not in MAX_DEPTH_CHOICES:
            raise ConfigError(f"max_depth {self.max_depth} not in {MAX_DEPTH_CHOICES}")
        for name, (lo, hi) in RANGES.items():
            v = getattr(self, name)
            if name in INT_PARAMS and not isinstance(v, int):
                raise ConfigError(f"{name} must be an integer, got {v!r}")
            if not lo <= v <= hi:
                raise ConfigError(f"{name}={v} outside [{lo}, {hi}]")

    def to_dict(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(self)}

    @classmethod
    def from_dict(cls, d: dict) -> "HyperParams":
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ConfigError(f"unknown hyperparameter(s): {sorted(unknown)}")
        return cls(**d)
