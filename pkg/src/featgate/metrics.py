"""Regression metrics, permutation importance, and two-sample statistics.

Everything here is pure and deterministic.  The Mann-Whitney test ships two
paths: a tie-corrected normal approximation used by the experiment harness
(31 runs per arm) and an exact enumeration over group assignments that is
feasible for small pooled samples and doubles as the approximation's oracle.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .booster import BoostedModel, predict
from .errors import (
    ConstantTruth,
    EmptySample,
    LengthMismatch,
    NonFiniteInput,
    OutOfRange,
)

DEFAULT_PFI_REPEATS = 10
DEFAULT_OVERLAP_BINS = 10
#: Largest pooled sample size for which exact U enumeration is attempted.
EXACT_U_LIMIT = 16


@dataclass(frozen=True)
class MetricSet:
    """r2, mean absolute error, and root mean squared error of one fit."""

    r2: float
    mae: float
    rmse: float

    def to_dict(self) -> dict:
        return {"r2": self.r2, "mae": self.mae, "rmse": self.rmse}

    @staticmethod
    def from_dict(d: dict) -> "MetricSet":
        return MetricSet(r2=float(d["r2"]), mae=float(d["mae"]),
                         rmse=float(d["rmse"]))


@dataclass(frozen=True)
class PfiEntry:
    """Mean r2 drop after permuting one feature column."""

    feature: str
    r2_drop: float
    repeats: int


@dataclass(frozen=True)
class UTestResult:
    u_statistic: float
    p_value: float
    n1: int
    n2: int


def _paired(y_true, y_pred) -> tuple[np.ndarray, np.ndarray]:
    yt = np.asarray(y_true, dtype=np.float64).reshape(-1)
    yp = np.asarray(y_pred, dtype=np.float64).reshape(-1)
    if yt.shape != yp.shape:
        raise LengthMismatch(
            f"y_true has {yt.size} values, y_pred has {yp.size}")
    if yt.size == 0:
        raise EmptySample("metrics need at least one observation")
    if not (np.isfinite(yt).all() and np.isfinite(yp).all()):
        raise NonFiniteInput("metrics require finite inputs")
    return yt, yp


def compute_error_metrics(y_true, y_pred) -> tuple[float, float]:
    """(mae, rmse) only; usable when y_true is constant and r2 undefined."""
    yt, yp = _paired(y_true, y_pred)
    err = yp - yt
    mae = float(np.mean(np.abs(err)))
    rmse = float(math.sqrt(np.mean(err * err)))
    return mae, rmse


def compute_metrics(y_true, y_pred) -> MetricSet:
    """MetricSet with r2 = 1 - SSE/SST; raises ConstantTruth when SST = 0."""
    yt, yp = _paired(y_true, y_pred)
    err = yp - yt
    mae = float(np.mean(np.abs(err)))
    rmse = float(math.sqrt(np.mean(err * err)))
    dev = yt - yt.mean()
    sst = float(np.sum(dev * dev))
    if sst == 0.0:
        raise ConstantTruth("y_true is constant so r2 is undefined")
    sse = float(np.sum(err * err))
    return MetricSet(r2=1.0 - sse / sst, mae=mae, rmse=rmse)


# -- Mann-Whitney U ----------------------------------------------------------

def _sample(x, name: str) -> np.ndarray:
    v = np.asarray(x, dtype=np.float64).reshape(-1)
    if v.size == 0:
        raise EmptySample(f"{name} sample is empty")
    if not np.isfinite(v).all():
        raise NonFiniteInput(f"{name} sample contains non-finite values")
    return v


def _midranks(v: np.ndarray) -> np.ndarray:
    """1-based ranks; tied values share the mean of their rank block."""
    _, inv, cnt = np.unique(v, return_inverse=True, return_counts=True)
    upper = np.cumsum(cnt)
    mid = upper - (cnt - 1) / 2.0
    return mid[inv]


def mann_whitney_u(a, b) -> UTestResult:
    """Two-sided U test.

    U is the statistic of the first sample: U = R1 - n1(n1+1)/2 with midrank
    ties.  Samples small enough to enumerate (n1+n2 <= 16) get the exact p;
    the normal approximation is badly off at such sizes.  Larger samples use
    the approximation with tie-corrected variance and a 0.5 continuity
    correction; identical samples report p = 1.
    """
    av = _sample(a, "first")
    bv = _sample(b, "second")
    if av.size + bv.size <= EXACT_U_LIMIT:
        return mann_whitney_u_exact(av, bv)
    return _mann_whitney_u_approx(av, bv)


def _mann_whitney_u_approx(a, b) -> UTestResult:
    """Normal-approximation path, valid for any sizes."""
    av = _sample(a, "first")
    bv = _sample(b, "second")
    n1, n2 = av.size, bv.size
    n = n1 + n2
    ranks = _midranks(np.concatenate([av, bv]))
    u = float(np.sum(ranks[:n1])) - n1 * (n1 + 1) / 2.0
    mu = n1 * n2 / 2.0
    _, cnt = np.unique(np.concatenate([av, bv]), return_counts=True)
    c = cnt.astype(np.float64)
    ties = float(np.sum(c * c * c - c))
    var = n1 * n2 / 12.0 * ((n + 1.0) - ties / (n * (n - 1.0)))
    if var <= 0.0:
        p = 1.0
    else:
        z = max(0.0, (abs(u - mu) - 0.5) / math.sqrt(var))
        p = min(1.0, math.erfc(z / math.sqrt(2.0)))
    return UTestResult(u_statistic=u, p_value=p, n1=n1, n2=n2)


def mann_whitney_u_exact(a, b) -> UTestResult:
    """Exact two-sided U test by enumerating all C(n1+n2, n1) assignments.

    Midranks depend only on the pooled values, so every assignment's U is a
    rank-subset sum; all ranks are exact binary halves, which keeps the
    comparisons below free of rounding.  p = 2 * min(P(U <= obs), P(U >= obs)),
    capped at 1.
    """
    av = _sample(a, "first")
    bv = _sample(b, "second")
    n1, n2 = av.size, bv.size
    n = n1 + n2
    if n > EXACT_U_LIMIT:
        raise OutOfRange(
            f"exact enumeration supports n1+n2 <= {EXACT_U_LIMIT}, got {n}")
    ranks = _midranks(np.concatenate([av, bv])).tolist()
    offset = n1 * (n1 + 1) / 2.0
    u_obs = sum(ranks[:n1]) - offset
    lo = hi = total = 0
    for combo in itertools.combinations(range(n), n1):
        u = sum(ranks[i] for i in combo) - offset
        total += 1
        if u <= u_obs:
            lo += 1
        if u >= u_obs:
            hi += 1
    p = min(1.0, 2.0 * min(lo, hi) / total)
    return UTestResult(u_statistic=u_obs, p_value=p, n1=n1, n2=n2)


# -- Histogram overlap -------------------------------------------------------

def histogram_overlap(a, b, bins: int = DEFAULT_OVERLAP_BINS) -> float:
    """Sum of per-bin min proportions over shared equal-width edges."""
    if bins < 2:
        raise OutOfRange(f"need at least 2 bins, got {bins}")
    av = _sample(a, "first")
    bv = _sample(b, "second")
    lo = min(av.min(), bv.min())
    hi = max(av.max(), bv.max())
    if lo == hi:
        return 1.0
    edges = np.linspace(lo, hi, bins + 1)
    pa = np.histogram(av, bins=edges)[0] / av.size
    pb = np.histogram(bv, bins=edges)[0] / bv.size
    return float(np.minimum(pa, pb).sum())


# -- Permutation feature importance ------------------------------------------

def _pfi_rng(seed, column: int, repeat: int) -> np.random.Generator:
    return np.random.Generator(
        np.random.PCG64(np.random.SeedSequence((seed, column, repeat))))


def permutation_importance(m: BoostedModel, X_test, y_test,
                           repeats: int = DEFAULT_PFI_REPEATS, seed: int = 0,
                           *, return_raw: bool = False, permute=None):
    """Per-feature drop in r2 when that column is shuffled.

    Each (column, repeat) pair draws its permutation from an independent
    generator seeded by (seed, column, repeat), so any evaluation order or
    parallel schedule produces identical numbers.  Entries come back sorted
    by drop, descending, ties keeping column order.  `permute` is a test
    hook: permute(gen, n) -> index array, defaulting to gen.permutation(n).

    With return_raw=True also returns the (n_features, repeats) array of
    permuted-column r2 values.
    """
    if repeats < 1:
        raise OutOfRange(f"repeats must be >= 1, got {repeats}")
    X = np.ascontiguousarray(np.asarray(X_test, dtype=np.float64))
    y = np.asarray(y_test, dtype=np.float64).reshape(-1)
    if X.ndim != 2 or X.shape[0] == 0:
        raise EmptySample("X_test must be a nonempty 2-d matrix")
    n, p = X.shape
    base = compute_metrics(y, predict(m, X)).r2
    raw = np.empty((p, repeats), dtype=np.float64)
    for j in range(p):
        for k in range(repeats):
            gen = _pfi_rng(seed, j, k)
            idx = gen.permutation(n) if permute is None else permute(gen, n)
            xp = X.copy()
            xp[:, j] = X[idx, j]
            raw[j, k] = compute_metrics(y, predict(m, xp)).r2
    # mean of per-repeat drops, not drop of the mean: identical algebra, but
    # this way unchanged predictions give a drop of exactly 0.0
    entries = [
        PfiEntry(feature=m.feature_names[j],
                 r2_drop=float(np.mean(base - raw[j])),
                 repeats=repeats)
        for j in range(p)
    ]
    entries.sort(key=lambda e: -e.r2_drop)
    if return_raw:
        return entries, raw
    return entries
