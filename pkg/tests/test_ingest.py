"""Loading, returns, calendar encodings, alignment, splitting."""

import math

import numpy as np
import pandas as pd
import pytest

from featgate.errors import (
    AllGapColumn,
    DataError,
    DuplicateDate,
    EmptyIntersection,
    MissingColumn,
    NonPositivePrice,
    OutOfRange,
    TooShort,
    UnparsableDate,
)
from featgate.config import DEFAULT_INDICATOR_COLUMNS
from featgate.ingest import (
    AlignedDataset,
    DatedSeries,
    IndicatorTable,
    PriceSeries,
    align,
    build_dataset,
    calendar_features,
    chronological_split,
    export_csv,
    load_aligned_csv,
    load_indicators,
    load_prices,
    log_returns,
)


def _write(path, text):
    path.write_text(text)
    return path


def _days(start, n):
    return np.datetime64(start, "D") + np.arange(n)


def _returns_series(start, values):
    vals = np.asarray(values, dtype=np.float64)
    return DatedSeries("Returns", _days(start, len(vals)), vals)


# -- load_prices -------------------------------------------------------------

def test_load_prices_three_rows(tmp_path):
    p = _write(tmp_path / "p.csv",
               "Date,Close\n2021-01-01,100\n2021-01-02,110\n2021-01-03,99\n")
    ps = load_prices(p)
    assert len(ps) == 3
    assert ps.close.tolist() == [100.0, 110.0, 99.0]
    assert str(ps.dates[0]) == "2021-01-01"


def test_load_prices_duplicate_date(tmp_path):
    p = _write(tmp_path / "p.csv",
               "Date,Close\n2021-01-01,100\n2021-01-01,101\n2021-01-02,99\n")
    with pytest.raises(DuplicateDate):
        load_prices(p)


def test_load_prices_fixture_has_558_rows(fixtures_dir):
    ps = load_prices(fixtures_dir / "btc_prices_558.csv")
    assert len(ps) == 558
    assert str(ps.dates[0]) == "2020-12-11"
    assert str(ps.dates[-1]) == "2022-06-21"


def test_load_prices_sorts_unsorted_input(tmp_path):
    p = _write(tmp_path / "p.csv",
               "Date,Close\n2021-01-03,99\n2021-01-01,100\n2021-01-02,110\n")
    ps = load_prices(p)
    assert [str(d) for d in ps.dates] == ["2021-01-01", "2021-01-02", "2021-01-03"]
    assert ps.close.tolist() == [100.0, 110.0, 99.0]


def test_load_prices_missing_column(tmp_path):
    p = _write(tmp_path / "p.csv", "Date,Price\n2021-01-01,100\n")
    with pytest.raises(MissingColumn):
        load_prices(p)


def test_load_prices_bad_date(tmp_path):
    p = _write(tmp_path / "p.csv", "Date,Close\nnot-a-date,100\n2021-01-02,99\n")
    with pytest.raises(UnparsableDate):
        load_prices(p)


@pytest.mark.parametrize("bad", ["0", "-5", "nan", "oops"])
def test_load_prices_rejects_nonpositive_close(tmp_path, bad):
    p = _write(tmp_path / "p.csv", f"Date,Close\n2021-01-01,{bad}\n2021-01-02,99\n")
    with pytest.raises(NonPositivePrice):
        load_prices(p)


def test_price_series_needs_two_rows():
    with pytest.raises(TooShort):
        PriceSeries(dates=_days("2021-01-01", 1), close=np.array([100.0]))


# -- log_returns -------------------------------------------------------------

def _prices(closes, start="2021-01-01"):
    return PriceSeries(dates=_days(start, len(closes)),
                       close=np.asarray(closes, dtype=np.float64))


def test_log_returns_equal_prices():
    out = log_returns(_prices([100.0, 100.0]))
    assert out.name == "Returns"
    assert out.values.tolist() == [0.0]


def test_log_returns_e_ratio():
    out = log_returns(_prices([1.0, math.e]))
    assert out.values[0] == pytest.approx(1.0, abs=1e-15)


def test_log_returns_hand_ratios():
    out = log_returns(_prices([100.0, 110.0, 99.0]))
    # independent hand evaluation of ln(P_t / P_{t-1})
    expect = [math.log(110.0 / 100.0), math.log(99.0 / 110.0)]
    assert out.values.tolist() == pytest.approx(expect, rel=1e-15)


def test_log_returns_drops_first_date():
    p = _prices([100.0, 110.0, 99.0])
    out = log_returns(p)
    assert len(out) == len(p) - 1
    assert out.dates[0] == p.dates[1]


# -- calendar_features -------------------------------------------------------

def test_calendar_monday_is_one():
    # 2021-01-04 was a Monday
    dow, _ = calendar_features(_days("2021-01-04", 1))
    assert dow.name == "DayOfWeek_cos"
    assert dow.values[0] == pytest.approx(1.0, abs=1e-15)


def test_calendar_january_first():
    _, doy = calendar_features(_days("2021-01-01", 1))
    assert doy.name == "DOY_cos"
    assert doy.values[0] == pytest.approx(1.0, abs=1e-15)


def test_calendar_thursday_value():
    # 2021-01-07 was a Thursday (dow = 3): cos(6*pi/7)
    dow, _ = calendar_features(_days("2021-01-07", 1))
    assert dow.values[0] == pytest.approx(-0.9009689, abs=1e-7)
    assert dow.values[0] == pytest.approx(math.cos(6.0 * math.pi / 7.0), rel=1e-15)


def test_calendar_week_cycle():
    dow, _ = calendar_features(_days("2021-01-04", 14))
    assert dow.values[:7] == pytest.approx(dow.values[7:], rel=1e-15)


# -- align -------------------------------------------------------------------

def _calendar_for(series):
    return calendar_features(series.dates)


def test_align_ten_rows_horizon_seven():
    rets = _returns_series("2021-03-01", np.linspace(-0.02, 0.02, 10))
    d = align(rets, _calendar_for(rets), None, horizon=7)
    assert len(d) == 3
    assert d.pool_tag == "Baseline"


def test_align_leading_gap_becomes_zero():
    rets = _returns_series("2021-03-01", np.arange(10) / 100.0)
    vals = np.array([np.nan, np.nan, np.nan, np.nan, 5.0, np.nan, 7.0, np.nan, np.nan, 10.0])
    ind = IndicatorTable(dates=rets.dates, columns={"x": vals})
    d = align(rets, _calendar_for(rets), ind, horizon=7)
    assert d.series["x"].tolist() == [0.0, 0.0, 0.0]  # leading gaps -> 0
    assert all(np.isfinite(v).all() for v in d.series.values())


def test_align_forward_fills_interior_gaps():
    rets = _returns_series("2021-03-01", np.arange(12) / 100.0)
    vals = np.full(12, np.nan)
    vals[1] = 3.0
    vals[4] = 9.0
    ind = IndicatorTable(dates=rets.dates, columns={"x": vals})
    d = align(rets, _calendar_for(rets), ind, horizon=7)
    assert d.series["x"].tolist() == [0.0, 3.0, 3.0, 3.0, 9.0]


def test_align_full_fixture_finite_and_augmented(fixtures_dir):
    p = load_prices(fixtures_dir / "btc_prices.csv")
    ind = load_indicators(fixtures_dir / "covid_indicators.csv",
                          columns=list(DEFAULT_INDICATOR_COLUMNS),
                          location_col="location", location="World")
    d = build_dataset(p, ind, horizon=7)
    assert d.pool_tag == "Augmented"
    assert len(d) == 558
    # independent scan: plain-python math.isfinite over every cell
    for name, col in d.series.items():
        assert all(math.isfinite(float(v)) for v in col), name
    assert all(math.isfinite(float(v)) for v in d.target)


def test_align_target_bit_equal_re_scan(fixtures_dir):
    p = load_prices(fixtures_dir / "btc_prices.csv")
    d = build_dataset(p, None, horizon=7)
    ret = d.series["Returns"]
    for t in range(len(d) - 7):
        assert d.target[t].item() == ret[t + 7].item()


def test_align_empty_intersection():
    rets = _returns_series("2021-03-01", np.arange(10) / 100.0)
    other = _returns_series("2030-01-01", np.arange(10) / 100.0)
    cal = _calendar_for(other)
    with pytest.raises(EmptyIntersection):
        align(rets, cal, None, horizon=1)


def test_align_all_gap_column():
    rets = _returns_series("2021-03-01", np.arange(10) / 100.0)
    ind = IndicatorTable(dates=rets.dates, columns={"x": np.full(10, np.nan)})
    with pytest.raises(AllGapColumn):
        align(rets, _calendar_for(rets), ind, horizon=7)


def test_align_strict_policy_rejects_gaps():
    rets = _returns_series("2021-03-01", np.arange(10) / 100.0)
    vals = np.arange(10, dtype=np.float64)
    vals[3] = np.nan
    ind = IndicatorTable(dates=rets.dates, columns={"x": vals})
    with pytest.raises(DataError):
        align(rets, _calendar_for(rets), ind, horizon=7, gap_policy="strict")


def test_align_join_stage_idempotent():
    """Feeding aligned columns back through align changes no surviving cell.

    The deterministic tail drop recurs (the rebuilt table is 7 rows shorter)
    but the join and gap fill are fixed points.
    """
    rets = _returns_series("2021-03-01", np.sin(np.arange(30)))
    vals = np.arange(30, dtype=np.float64)
    vals[:4] = np.nan
    ind = IndicatorTable(dates=rets.dates, columns={"x": vals})
    d = align(rets, _calendar_for(rets), ind, horizon=7)

    rets2 = DatedSeries("Returns", d.dates, d.series["Returns"])
    cal2 = (DatedSeries("DayOfWeek_cos", d.dates, d.series["DayOfWeek_cos"]),
            DatedSeries("DOY_cos", d.dates, d.series["DOY_cos"]))
    ind2 = IndicatorTable(dates=d.dates, columns={"x": d.series["x"]})
    d2 = align(rets2, cal2, ind2, horizon=7)

    assert (d2.dates == d.dates[: len(d2)]).all()
    for name in d.series:
        assert d2.series[name].tolist() == d.series[name][: len(d2)].tolist()


# -- chronological_split -----------------------------------------------------

def _toy_dataset(n, horizon=7):
    rets = _returns_series("2021-01-01", np.arange(n + horizon) / 100.0)
    return align(rets, _calendar_for(rets), None, horizon=horizon)


def test_split_default_sizes(fixtures_dir):
    p = load_prices(fixtures_dir / "btc_prices.csv")
    d = build_dataset(p, None)
    s = chronological_split(d, 358, 200)
    assert (s.train_end, s.test_len) == (358, 200)


def test_split_small_valid():
    d = _toy_dataset(10)
    s = chronological_split(d, 8, 2)
    assert s.train_end + s.test_len == len(d)


def test_split_overflow_rejected():
    d = _toy_dataset(10)
    with pytest.raises(OutOfRange):
        chronological_split(d, 9, 2)


@pytest.mark.parametrize("tr,te", [(0, 2), (5, 0), (-1, 3)])
def test_split_nonpositive_rejected(tr, te):
    d = _toy_dataset(10)
    with pytest.raises(OutOfRange):
        chronological_split(d, tr, te)


def test_split_concat_reproduces_rows():
    d = _toy_dataset(12)
    s = chronological_split(d, 9, 3)
    col = d.series["Returns"]
    train = col[: s.train_end]
    test = col[s.train_end: s.train_end + s.test_len]
    assert np.concatenate([train, test]).tolist() == col[: 12].tolist()


# -- indicator loading and CSV round-trip ------------------------------------

def test_load_indicators_location_filter(tmp_path):
    p = _write(tmp_path / "c.csv",
               "location,date,x\n"
               "World,2021-01-01,1.5\n"
               "Mars,2021-01-01,9.9\n"
               "World,2021-01-02,2.5\n")
    t = load_indicators(p, columns=["x"], location_col="location", location="World")
    assert t.columns["x"].tolist() == [1.5, 2.5]


def test_load_indicators_missing_column(tmp_path):
    p = _write(tmp_path / "c.csv", "date,x\n2021-01-01,1\n")
    with pytest.raises(MissingColumn):
        load_indicators(p, columns=["x", "y"])


def test_load_indicators_gap_cells_become_nan(tmp_path):
    p = _write(tmp_path / "c.csv", "date,x\n2021-01-01,\n2021-01-02,4\n")
    t = load_indicators(p, columns=["x"])
    assert np.isnan(t.columns["x"][0]) and t.columns["x"][1] == 4.0


def test_export_load_round_trip(tmp_path):
    d = _toy_dataset(20)
    out = tmp_path / "aligned.csv"
    export_csv(d, out)
    d2 = load_aligned_csv(out, pool_tag=d.pool_tag)
    assert d2.horizon == d.horizon
    assert (d2.dates == d.dates).all()
    assert list(d2.series) == list(d.series)
    for name in d.series:
        assert d2.series[name].tolist() == d.series[name].tolist()
    assert d2.target.tolist() == d.target.tolist()


def test_aligned_dataset_rejects_nan():
    with pytest.raises(DataError):
        AlignedDataset(
            dates=_days("2021-01-01", 2),
            series={"Returns": np.array([0.1, np.nan])},
            target=np.array([0.0, 0.0]),
            pool_tag="Baseline",
        )
