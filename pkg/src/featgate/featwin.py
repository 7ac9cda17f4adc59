"""Windowed feature engineering: (series, w0, wl, fc) -> named columns.

A feature is described by the base series it reads, a window that ends w0
days before the current row and extends wl days further back, and a
function code fc selecting the statistic applied to that window.  With
w0 <= 8 and wl <= 7 the deepest reachable lag is 14 days.

Function codes:

  -1 disabled (no column)        7 sum
   0 raw window values _1.._wl   8 first (oldest)
   1 mean          _avg          9 last (newest)
   3 median        _median      10 last - first   _diff
   4 max           _max         11 (last-first)/first  _pctch
   5 min           _min         12 25th percentile _p25
   6 max - min     _range       13 50th percentile _p50
                   _sum         14 75th percentile _p75
                                15 p75 - p25      _IQR

Code 2 is reserved for entropy-based statistics and rejected.  Percentiles
interpolate linearly at rank q*(n-1).  fc 11 with first == 0 yields 0 and
bumps a degenerate counter rather than emitting NaN.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .errors import (
    InsufficientHistory,
    InvalidFunctionCode,
    OutOfRange,
    TooManyFeatures,
    UnknownSeries,
)
from .ingest import AlignedDataset

W0_MAX = 8
WL_MAX = 7
MAX_LOOKBACK = 14
MAX_ENABLED = 6

FC_DISABLED = -1
FC_RAW = 0
FC_SUFFIX = {
    1: "_avg",
    3: "_median",
    4: "_max",
    5: "_min",
    6: "_range",
    7: "_sum",
    8: "_first",
    9: "_last",
    10: "_diff",
    11: "_pctch",
    12: "_p25",
    13: "_p50",
    14: "_p75",
    15: "_IQR",
}
VALID_FC = frozenset({FC_DISABLED, FC_RAW, *FC_SUFFIX})


@dataclass(frozen=True)
class FeatureSpec:
    series: str
    w0: int
    wl: int
    fc: int

    def __post_init__(self):
        if not 0 <= self.w0 <= W0_MAX:
            raise OutOfRange(f"w0={self.w0} outside [0, {W0_MAX}]")
        if not 1 <= self.wl <= WL_MAX:
            raise OutOfRange(f"wl={self.wl} outside [1, {WL_MAX}]")
        _check_fc(self.fc)

    @property
    def enabled(self) -> bool:
        return self.fc != FC_DISABLED

    def column_names(self) -> list[str]:
        if self.fc == FC_DISABLED:
            return []
        if self.fc == FC_RAW:
            return [f"{self.series}_{i}" for i in range(1, self.wl + 1)]
        return [f"{self.series}{FC_SUFFIX[self.fc]}"]

    def to_string(self) -> str:
        return f"{self.series}|{self.w0}|{self.wl}|{self.fc}"

    @classmethod
    def from_string(cls, s: str) -> "FeatureSpec":
        parts = s.rsplit("|", 3)
        if len(parts) != 4:
            raise OutOfRange(f"malformed feature spec string {s!r}")
        return cls(parts[0], int(parts[1]), int(parts[2]), int(parts[3]))


@dataclass(frozen=True)
class FeatureMatrix:
    column_names: list[str]
    values: np.ndarray  # shape (n_rows, n_cols)
    row_dates: np.ndarray
    degenerate_pctch: int = 0

    def __post_init__(self):
        if self.values.shape != (len(self.row_dates), len(self.column_names)):
            raise OutOfRange("feature matrix shape disagrees with names/dates")


def _check_fc(fc: int) -> None:
    if fc == 2:
        raise InvalidFunctionCode(
            "fc=2 is reserved for entropy-based functions and not supported"
        )
    if fc not in VALID_FC:
        raise InvalidFunctionCode(f"fc={fc} is not a known function code")


def window_slice(x: np.ndarray, t: int, w0: int, wl: int) -> np.ndarray:
    """Values at [t-w0-wl+1 .. t-w0], oldest first."""
    start = t - w0 - wl + 1
    if start < 0:
        raise InsufficientHistory(
            f"row {t} cannot reach back w0={w0}, wl={wl} (start index {start})"
        )
    return x[start: t - w0 + 1]


class _Degenerates:
    """Counts fc=11 windows whose first value is exactly 0."""

    def __init__(self):
        self.pctch = 0


def _fc_matrix(w: np.ndarray, fc: int, stats: _Degenerates | None) -> np.ndarray:
    """Apply fc row-wise to a (n, wl) window stack; returns (n, k) columns."""
    if fc == FC_DISABLED:
        return np.empty((w.shape[0], 0))
    if fc == FC_RAW:
        return np.array(w, dtype=np.float64, copy=True)
    if fc == 1:
        out = w.mean(axis=1)
    elif fc == 3 or fc == 13:
        out = np.median(w, axis=1)
    elif fc == 4:
        out = w.max(axis=1)
    elif fc == 5:
        out = w.min(axis=1)
    elif fc == 6:
        out = w.max(axis=1) - w.min(axis=1)
    elif fc == 7:
        out = w.sum(axis=1)
    elif fc == 8:
        out = w[:, 0]
    elif fc == 9:
        out = w[:, -1]
    elif fc == 10:
        out = w[:, -1] - w[:, 0]
    elif fc == 11:
        first, last = w[:, 0], w[:, -1]
        zero = first == 0.0
        if stats is not None:
            stats.pctch += int(zero.sum())
        out = np.where(zero, 0.0, (last - first) / np.where(zero, 1.0, first))
    elif fc == 12:
        out = np.quantile(w, 0.25, axis=1)
    elif fc == 14:
        out = np.quantile(w, 0.75, axis=1)
    elif fc == 15:
        out = np.quantile(w, 0.75, axis=1) - np.quantile(w, 0.25, axis=1)
    else:
        _check_fc(fc)
        raise AssertionError("unreachable")
    return out.reshape(-1, 1).astype(np.float64)


def apply_fc(window: np.ndarray, fc: int, stats: _Degenerates | None = None) -> np.ndarray:
    """Statistic of one window; length wl for fc=0, 1 otherwise, 0 for fc=-1."""
    _check_fc(fc)
    w = np.asarray(window, dtype=np.float64)
    if w.ndim != 1 or (w.size == 0 and fc != FC_DISABLED):
        raise OutOfRange("window must be a nonempty 1-d vector")
    return _fc_matrix(w.reshape(1, -1), fc, stats)[0] if fc != FC_DISABLED else np.empty(0)


def build_matrix(
    d: AlignedDataset,
    specs: list[FeatureSpec],
    max_lookback: int = MAX_LOOKBACK,
) -> FeatureMatrix:
    """Stack feature columns in spec order over rows t >= max_lookback.

    The row range never depends on which windows the specs use, so two
    candidate configurations always compete on identical samples.
    """
    enabled = [s for s in specs if s.enabled]
    if len(enabled) > MAX_ENABLED:
        raise TooManyFeatures(f"{len(enabled)} enabled features; cap is {MAX_ENABLED}")
    n_rows = len(d) - max_lookback
    if n_rows <= 0:
        raise InsufficientHistory(
            f"dataset has {len(d)} rows; need more than max_lookback={max_lookback}"
        )
    stats = _Degenerates()
    names: list[str] = []
    cols: list[np.ndarray] = []
    for s in specs:
        if not s.enabled:
            continue
        if s.series not in d.series:
            raise UnknownSeries(f"series {s.series!r} not in dataset")
        depth = s.w0 + s.wl - 1
        if depth > max_lookback:
            raise InsufficientHistory(
                f"spec {s.to_string()} reaches lag {depth} > max_lookback {max_lookback}"
            )
        x = d.series[s.series]
        sw = sliding_window_view(x, s.wl)
        start = max_lookback - s.w0 - s.wl + 1
        w = sw[start: start + n_rows]
        names.extend(s.column_names())
        cols.append(_fc_matrix(w, s.fc, stats))
    values = (np.concatenate(cols, axis=1) if cols
              else np.empty((n_rows, 0), dtype=np.float64))
    return FeatureMatrix(
        column_names=names,
        values=values,
        row_dates=d.dates[max_lookback:],
        degenerate_pctch=stats.pctch,
    )
