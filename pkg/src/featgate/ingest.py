"""Loading, return computation, calendar encodings, and temporal alignment.

Everything here is pure: functions take immutable inputs and build new
objects, so they are safe to call from worker processes or threads.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import pandas as pd

from .errors import (
    AllGapColumn,
    DataError,
    DuplicateDate,
    EmptyIntersection,
    IoError,
    MissingColumn,
    NonPositivePrice,
    OutOfRange,
    TooShort,
    UnparsableDate,
)

GAP_POLICIES = ("ffill_zero", "strict")

#: Number of days the forecast target lies ahead of the feature date.
DEFAULT_HORIZON = 7


@dataclass(frozen=True)
class PriceSeries:
    """Daily closing prices on a strictly increasing date index."""

    dates: np.ndarray  # datetime64[D]
    close: np.ndarray  # float64, all > 0

    def __post_init__(self):
        if len(self.dates) != len(self.close):
            raise DataError("dates and close must have equal length")
        if len(self.close) < 2:
            raise TooShort("a price series needs at least 2 rows")
        if np.any(np.diff(self.dates.astype("datetime64[D]").astype(np.int64)) <= 0):
            raise DuplicateDate("dates must be strictly increasing")
        if not np.all(np.isfinite(self.close)) or np.any(self.close <= 0):
            raise NonPositivePrice("every close must be a finite positive number")

    def __len__(self) -> int:
        return len(self.dates)


@dataclass(frozen=True)
class DatedSeries:
    """One named daily series (e.g. "Returns") on its own date index."""

    name: str
    dates: np.ndarray
    values: np.ndarray

    def __len__(self) -> int:
        return len(self.dates)


@dataclass(frozen=True)
class IndicatorTable:
    """Named daily indicator columns; gaps (NaN) allowed until alignment."""

    dates: np.ndarray
    columns: dict[str, np.ndarray]

    def __post_init__(self):
        n = len(self.dates)
        for name, vals in self.columns.items():
            if len(vals) != n:
                raise DataError(f"indicator column {name!r} length mismatch")
        if n > 1 and np.any(np.diff(self.dates.astype("datetime64[D]").astype(np.int64)) <= 0):
            raise DuplicateDate("indicator dates must be strictly increasing")

    def __len__(self) -> int:
        return len(self.dates)


@dataclass(frozen=True)
class AlignedDataset:
    """Date-aligned base series plus the forward-shifted return target.

    ``series`` always contains "Returns", "DayOfWeek_cos" and "DOY_cos";
    exogenous indicator columns follow when the table was built with them.
    ``target[t]`` is the return ``horizon`` rows ahead; rows without a
    defined target have already been dropped.
    """

    dates: np.ndarray
    series: dict[str, np.ndarray]
    target: np.ndarray
    pool_tag: str  # "Baseline" | "Augmented"
    horizon: int = DEFAULT_HORIZON

    def __post_init__(self):
        n = len(self.dates)
        if len(self.target) != n:
            raise DataError("target length mismatch")
        for name, vals in self.series.items():
            if len(vals) != n:
                raise DataError(f"series {name!r} length mismatch")
            if not np.all(np.isfinite(vals)):
                raise DataError(f"series {name!r} contains non-finite cells")
        if not np.all(np.isfinite(self.target)):
            raise DataError("target contains non-finite cells")
        if self.pool_tag not in ("Baseline", "Augmented"):
            raise DataError(f"unknown pool_tag {self.pool_tag!r}")

    def __len__(self) -> int:
        return len(self.dates)

    @property
    def target_column(self) -> str:
        return f"target__h{self.horizon}"

    def to_frame(self) -> pd.DataFrame:
        df = pd.DataFrame({"date": self.dates.astype("datetime64[s]")})
        for name, vals in self.series.items():
            df[name] = vals
        df[self.target_column] = self.target
        return df


@dataclass(frozen=True)
class SplitIndices:
    """Chronological split: rows [0, train_end) train, then test_len test rows."""

    train_end: int
    test_len: int

    def __post_init__(self):
        if self.train_end <= 0 or self.test_len <= 0:
            raise OutOfRange("train_end and test_len must both be positive")


def _parse_dates(raw, context: str) -> np.ndarray:
    try:
        parsed = pd.to_datetime(raw, format="ISO8601")
    except (ValueError, TypeError) as exc:
        raise UnparsableDate(f"{context}: {exc}") from None
    return parsed.values.astype("datetime64[D]")


def load_prices(path, date_col: str = "Date", close_col: str = "Close") -> PriceSeries:
    """Read a price CSV with header columns ``date_col`` and ``close_col``."""
    try:
        df = pd.read_csv(path, float_precision="round_trip")
    except FileNotFoundError as exc:
        raise IoError(str(exc)) from None
    for col in (date_col, close_col):
        if col not in df.columns:
            raise MissingColumn(f"price file lacks column {col!r}")
    dates = _parse_dates(df[date_col], f"column {date_col!r}")
    close = pd.to_numeric(df[close_col], errors="coerce").to_numpy(dtype=np.float64)
    if np.any(~np.isfinite(close)) or np.any(close <= 0):
        raise NonPositivePrice(f"column {close_col!r} must hold finite positive numbers")
    order = np.argsort(dates, kind="stable")
    dates, close = dates[order], close[order]
    if len(dates) > 1 and np.any(np.diff(dates.astype(np.int64)) == 0):
        dup = dates[:-1][np.diff(dates.astype(np.int64)) == 0][0]
        raise DuplicateDate(f"repeated date {dup} in price file")
    return PriceSeries(dates=dates, close=close)


def load_indicators(
    path,
    columns: list[str],
    date_col: str = "date",
    location_col: str | None = None,
    location: str | None = None,
) -> IndicatorTable:
    """Read an indicator CSV, optionally filtered to one location."""
    try:
        df = pd.read_csv(path, float_precision="round_trip")
    except FileNotFoundError as exc:
        raise IoError(str(exc)) from None
    if date_col not in df.columns:
        raise MissingColumn(f"indicator file lacks column {date_col!r}")
    if location_col is not None:
        if location_col not in df.columns:
            raise MissingColumn(f"indicator file lacks column {location_col!r}")
        df = df[df[location_col] == location]
        if df.empty:
            raise EmptyIntersection(f"no rows with {location_col}={location!r}")
    missing = [c for c in columns if c not in df.columns]
    if missing:
        raise MissingColumn(f"indicator file lacks columns {missing}")
    dates = _parse_dates(df[date_col], f"column {date_col!r}")
    order = np.argsort(dates, kind="stable")
    dates = dates[order]
    if len(dates) > 1 and np.any(np.diff(dates.astype(np.int64)) == 0):
        raise DuplicateDate("repeated date in indicator file")
    cols = {
        c: pd.to_numeric(df[c], errors="coerce").to_numpy(dtype=np.float64)[order]
        for c in columns
    }
    return IndicatorTable(dates=dates, columns=cols)


def log_returns(p: PriceSeries) -> DatedSeries:
    """ln(close[t] / close[t-1]); the first date is dropped."""
    if len(p) < 2:
        raise TooShort("need at least 2 prices to form a return")
    vals = np.log(p.close[1:] / p.close[:-1])
    return DatedSeries(name="Returns", dates=p.dates[1:], values=vals)


def calendar_features(dates: np.ndarray) -> tuple[DatedSeries, DatedSeries]:
    """Cyclic encodings of day-of-week (Monday = 0) and day-of-year."""
    idx = pd.DatetimeIndex(dates)
    dow = idx.dayofweek.to_numpy(dtype=np.float64)
    doy = idx.dayofyear.to_numpy(dtype=np.float64)
    dow_cos = np.cos(2.0 * np.pi * dow / 7.0)
    doy_cos = np.cos(2.0 * np.pi * (doy - 1.0) / 365.25)
    d = dates.astype("datetime64[D]")
    return (
        DatedSeries("DayOfWeek_cos", d, dow_cos),
        DatedSeries("DOY_cos", d, doy_cos),
    )


def _join(series_list: list[DatedSeries], indicators: IndicatorTable | None,
          gap_policy: str) -> pd.DataFrame:
    """Inner-join everything on dates and apply the gap policy.

    Idempotent: joining the output's own columns again changes nothing.
    """
    if gap_policy not in GAP_POLICIES:
        raise DataError(f"unknown gap_policy {gap_policy!r}; expected one of {GAP_POLICIES}")
    frames = [
        pd.Series(s.values, index=pd.DatetimeIndex(s.dates), name=s.name)
        for s in series_list
    ]
    df = pd.concat(frames, axis=1, join="inner")
    if indicators is not None:
        ind = pd.DataFrame(indicators.columns, index=pd.DatetimeIndex(indicators.dates))
        for name in ind.columns:
            if not np.any(np.isfinite(ind[name].to_numpy())):
                raise AllGapColumn(f"indicator {name!r} has no observed value")
        df = pd.concat([df, ind], axis=1, join="inner")
        df = df.sort_index()
        if gap_policy == "ffill_zero" and not df.empty:
            cols = list(indicators.columns)
            df[cols] = df[cols].ffill().fillna(0.0)
    if df.empty:
        raise EmptyIntersection("no shared dates between inputs")
    if gap_policy == "strict" and df.isna().any().any():
        bad = [c for c in df.columns if df[c].isna().any()]
        raise DataError(f"gaps present under strict policy in columns {bad}")
    return df.sort_index()


def align(
    returns: DatedSeries,
    calendar: tuple[DatedSeries, DatedSeries],
    indicators: IndicatorTable | None = None,
    horizon: int = DEFAULT_HORIZON,
    gap_policy: str = "ffill_zero",
) -> AlignedDataset:
    """Inner-join all series on dates, attach the forward target, drop the tail.

    The target at row t is bit-equal to Returns at row t + horizon; the final
    ``horizon`` rows, whose target is undefined, are dropped.
    """
    if horizon < 1:
        raise DataError("horizon must be >= 1")
    df = _join([returns, *calendar], indicators, gap_policy)
    if len(df) <= horizon:
        raise TooShort(f"only {len(df)} aligned rows; need more than horizon={horizon}")
    ret = df["Returns"].to_numpy(dtype=np.float64)
    target = ret[horizon:]
    df = df.iloc[: len(df) - horizon]
    return AlignedDataset(
        dates=df.index.values.astype("datetime64[D]"),
        series={c: df[c].to_numpy(dtype=np.float64) for c in df.columns},
        target=target,
        pool_tag="Baseline" if indicators is None else "Augmented",
        horizon=horizon,
    )


def build_dataset(
    prices: PriceSeries,
    indicators: IndicatorTable | None = None,
    horizon: int = DEFAULT_HORIZON,
    gap_policy: str = "ffill_zero",
) -> AlignedDataset:
    """Convenience pipeline: returns + calendar encodings + align."""
    rets = log_returns(prices)
    cal = calendar_features(rets.dates)
    return align(rets, cal, indicators, horizon=horizon, gap_policy=gap_policy)


def chronological_split(d: AlignedDataset, train_end: int, test_len: int) -> SplitIndices:
    """Validate a train/test cut; never reorders rows."""
    split = SplitIndices(train_end=train_end, test_len=test_len)
    if train_end + test_len > len(d):
        raise OutOfRange(
            f"train_end({train_end}) + test_len({test_len}) exceeds {len(d)} rows"
        )
    return split


def export_csv(d: AlignedDataset, path) -> None:
    df = d.to_frame()
    df["date"] = df["date"].dt.strftime("%Y-%m-%d")
    try:
        # 17 significant digits so every float64 survives the round trip
        df.to_csv(path, index=False, float_format="%.17g")
    except OSError as exc:
        raise IoError(str(exc)) from None


def load_aligned_csv(path, pool_tag: str = "Augmented") -> AlignedDataset:
    """Read back a CSV written by :func:`export_csv`."""
    try:
        df = pd.read_csv(path, float_precision="round_trip")
    except FileNotFoundError as exc:
        raise IoError(str(exc)) from None
    if "date" not in df.columns:
        raise MissingColumn("aligned CSV lacks a 'date' column")
    target_cols = [c for c in df.columns if c.startswith("target__h")]
    if len(target_cols) != 1:
        raise MissingColumn("aligned CSV needs exactly one target__h<N> column")
    horizon = int(target_cols[0].removeprefix("target__h"))
    dates = _parse_dates(df["date"], "column 'date'")
    series = {
        c: df[c].to_numpy(dtype=np.float64)
        for c in df.columns
        if c not in ("date", target_cols[0])
    }
    return AlignedDataset(
        dates=dates,
        series=series,
        target=df[target_cols[0]].to_numpy(dtype=np.float64),
        pool_tag=pool_tag,
        horizon=horizon,
    )
