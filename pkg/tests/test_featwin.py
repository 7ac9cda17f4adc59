"""Windowed feature extraction against a naive pure-python oracle."""

import math

import numpy as np
import pytest

from featgate.errors import (
    InsufficientHistory,
    InvalidFunctionCode,
    OutOfRange,
    TooManyFeatures,
    UnknownSeries,
)
from featgate.featwin import (
    FC_SUFFIX,
    MAX_LOOKBACK,
    VALID_FC,
    FeatureSpec,
    apply_fc,
    build_matrix,
    window_slice,
)
from featgate.ingest import AlignedDataset


# -- independent oracle (loops and plain arithmetic only) --------------------

def oracle_percentile(vals, q):
    s = sorted(float(v) for v in vals)
    r = q * (len(s) - 1)
    lo = math.floor(r)
    hi = math.ceil(r)
    return s[lo] + (r - lo) * (s[hi] - s[lo])


def oracle_fc(w, fc):
    w = [float(v) for v in w]
    if fc == -1:
        return []
    if fc == 0:
        return list(w)
    if fc == 1:
        return [sum(w) / len(w)]
    if fc in (3, 13):
        return [oracle_percentile(w, 0.5)]
    if fc == 4:
        return [max(w)]
    if fc == 5:
        return [min(w)]
    if fc == 6:
        return [max(w) - min(w)]
    if fc == 7:
        return [sum(w)]
    if fc == 8:
        return [w[0]]
    if fc == 9:
        return [w[-1]]
    if fc == 10:
        return [w[-1] - w[0]]
    if fc == 11:
        return [0.0 if w[0] == 0.0 else (w[-1] - w[0]) / w[0]]
    if fc == 12:
        return [oracle_percentile(w, 0.25)]
    if fc == 14:
        return [oracle_percentile(w, 0.75)]
    if fc == 15:
        return [oracle_percentile(w, 0.75) - oracle_percentile(w, 0.25)]
    raise AssertionError(fc)


def _dataset(values, start="2021-01-01"):
    vals = np.asarray(values, dtype=np.float64)
    n = len(vals)
    dates = np.datetime64(start, "D") + np.arange(n)
    return AlignedDataset(
        dates=dates,
        series={"Returns": vals},
        target=np.zeros(n),
        pool_tag="Baseline",
    )


# -- window_slice ------------------------------------------------------------

def test_window_slice_ends_at_current():
    x = np.array([10.0, 20.0, 30.0, 40.0])
    assert window_slice(x, 3, 0, 2).tolist() == [30.0, 40.0]


def test_window_slice_offset_back():
    x = np.array([10.0, 20.0, 30.0, 40.0])
    assert window_slice(x, 3, 1, 2).tolist() == [20.0, 30.0]


def test_window_slice_insufficient_history():
    x = np.array([10.0, 20.0, 30.0, 40.0])
    with pytest.raises(InsufficientHistory):
        window_slice(x, 3, 3, 3)


def test_window_slice_oldest_first():
    x = np.arange(20.0)
    assert window_slice(x, 15, 2, 4).tolist() == [10.0, 11.0, 12.0, 13.0]


# -- apply_fc ----------------------------------------------------------------

def test_fc_mean():
    assert apply_fc(np.array([1.0, 2.0, 3.0]), 1).tolist() == [2.0]


def test_fc_range():
    assert apply_fc(np.array([5.0, 1.0, 3.0]), 6).tolist() == [4.0]


def test_fc_p75_interpolates():
    got = apply_fc(np.array([1.0, 2.0, 3.0, 4.0]), 14)[0]
    assert got == pytest.approx(3.25, abs=1e-15)
    assert got == pytest.approx(oracle_percentile([1, 2, 3, 4], 0.75), abs=1e-15)


def test_fc_p25_interpolates():
    assert apply_fc(np.array([1.0, 2.0, 3.0, 4.0]), 12)[0] == pytest.approx(1.75, abs=1e-15)


def test_fc_pctch():
    assert apply_fc(np.array([2.0, 5.0, 6.0, 8.0]), 11).tolist() == [3.0]


def test_fc_pctch_zero_first_defined():
    assert apply_fc(np.array([0.0, 5.0]), 11).tolist() == [0.0]


def test_fc_disabled_empty():
    assert apply_fc(np.array([1.0, 2.0]), -1).size == 0


def test_fc_raw_returns_window():
    assert apply_fc(np.array([4.0, 7.0]), 0).tolist() == [4.0, 7.0]


def test_fc_two_rejected():
    with pytest.raises(InvalidFunctionCode, match="entropy"):
        apply_fc(np.array([1.0]), 2)


@pytest.mark.parametrize("fc", [-3, 16, 99])
def test_fc_unknown_rejected(fc):
    with pytest.raises(InvalidFunctionCode):
        apply_fc(np.array([1.0]), fc)


def test_all_fcs_match_oracle_on_random_windows():
    rng = np.random.default_rng(7)
    for _ in range(300):
        wl = int(rng.integers(1, 8))
        w = rng.standard_normal(wl) * 10.0
        for fc in sorted(VALID_FC):
            got = apply_fc(w, fc)
            want = oracle_fc(w, fc)
            assert len(got) == len(want)
            for g, e in zip(got, want):
                assert g == pytest.approx(e, rel=1e-12, abs=1e-12)


def test_fc_algebraic_identities():
    rng = np.random.default_rng(11)
    for _ in range(200):
        wl = int(rng.integers(1, 8))
        w = rng.standard_normal(wl) * 5.0
        f = {fc: apply_fc(w, fc)[0] for fc in (1, 4, 5, 6, 7, 8, 9, 10, 12, 14, 15)}
        assert f[4] >= f[1] >= f[5]
        assert f[6] == pytest.approx(f[4] - f[5], rel=1e-12, abs=1e-12)
        assert f[15] == pytest.approx(f[14] - f[12], rel=1e-12, abs=1e-12)
        assert f[10] == pytest.approx(f[9] - f[8], rel=1e-12, abs=1e-12)
        assert f[7] == pytest.approx(wl * f[1], rel=1e-12, abs=1e-12)


def test_constant_window_values():
    w = np.full(5, 3.7)
    for fc in (1, 3, 4, 5, 8, 9, 12, 13, 14):
        assert apply_fc(w, fc)[0] == pytest.approx(3.7, rel=1e-15)
    for fc in (6, 10, 15):
        assert apply_fc(w, fc)[0] == 0.0


def test_singleton_window_values():
    w = np.array([2.5])
    for fc in (1, 3, 4, 5, 7, 8, 9, 12, 13, 14):
        assert apply_fc(w, fc)[0] == pytest.approx(2.5, rel=1e-15)
    for fc in (6, 10, 15):
        assert apply_fc(w, fc)[0] == 0.0
    assert apply_fc(w, 11)[0] == 0.0


# -- FeatureSpec -------------------------------------------------------------

def test_spec_validation():
    with pytest.raises(OutOfRange):
        FeatureSpec("Returns", 9, 2, 1)
    with pytest.raises(OutOfRange):
        FeatureSpec("Returns", 0, 0, 1)
    with pytest.raises(OutOfRange):
        FeatureSpec("Returns", 0, 8, 1)
    with pytest.raises(InvalidFunctionCode):
        FeatureSpec("Returns", 0, 2, 2)


def test_spec_string_round_trip():
    for s in (FeatureSpec("Returns", 0, 3, 1),
              FeatureSpec("new_cases_smoothed", 8, 7, 14),
              FeatureSpec("Returns (Bitcoin)", 2, 5, -1)):
        assert FeatureSpec.from_string(s.to_string()) == s


def test_spec_column_names():
    assert FeatureSpec("Returns", 0, 3, 1).column_names() == ["Returns_avg"]
    assert FeatureSpec("Returns", 0, 2, 0).column_names() == ["Returns_1", "Returns_2"]
    assert FeatureSpec("x", 0, 2, -1).column_names() == []
    assert FeatureSpec("x", 0, 4, 14).column_names() == ["x_p75"]


def test_suffix_table_complete():
    assert set(FC_SUFFIX) == {1, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12, 13, 14, 15}
    assert FC_SUFFIX[15] == "_IQR"


# -- build_matrix ------------------------------------------------------------

def test_build_matrix_basic():
    d = _dataset(np.arange(20.0))
    m = build_matrix(d, [FeatureSpec("Returns", 0, 3, 1)])
    assert m.values.shape == (6, 1)
    assert m.column_names == ["Returns_avg"]
    # row r corresponds to dataset row r + 14
    assert m.values[0, 0] == pytest.approx(np.mean([12.0, 13.0, 14.0]), rel=1e-15)
    assert (m.row_dates == d.dates[14:]).all()


def test_build_matrix_disabled_spec():
    d = _dataset(np.arange(20.0))
    m = build_matrix(d, [FeatureSpec("Returns", 0, 3, -1)])
    assert m.values.shape == (6, 0)
    assert m.column_names == []
    assert len(m.row_dates) == 6


def test_build_matrix_raw_equals_first_last():
    d = _dataset(np.sin(np.arange(25.0)))
    raw = build_matrix(d, [FeatureSpec("Returns", 1, 2, 0)])
    first = build_matrix(d, [FeatureSpec("Returns", 1, 2, 8)])
    last = build_matrix(d, [FeatureSpec("Returns", 1, 2, 9)])
    assert raw.column_names == ["Returns_1", "Returns_2"]
    assert raw.values[:, 0].tolist() == first.values[:, 0].tolist()
    assert raw.values[:, 1].tolist() == last.values[:, 0].tolist()


def test_build_matrix_matches_scalar_path():
    rng = np.random.default_rng(3)
    d = _dataset(rng.standard_normal(40))
    specs = [FeatureSpec("Returns", 4, 5, 14),
             FeatureSpec("Returns", 8, 7, 11),
             FeatureSpec("Returns", 0, 1, 9)]
    m = build_matrix(d, specs)
    x = d.series["Returns"]
    for r in range(m.values.shape[0]):
        t = r + MAX_LOOKBACK
        got = m.values[r]
        want = []
        for s in specs:
            want.extend(oracle_fc(window_slice(x, t, s.w0, s.wl), s.fc))
        assert got.tolist() == pytest.approx(want, rel=1e-12, abs=1e-12)


def test_build_matrix_row_count_spec_independent():
    rng = np.random.default_rng(5)
    d = _dataset(rng.standard_normal(60))
    counts = set()
    for _ in range(10):
        specs = [
            FeatureSpec(
                "Returns",
                int(rng.integers(0, 9)),
                int(rng.integers(1, 8)),
                int(rng.choice(sorted(VALID_FC))),
            )
            for _ in range(int(rng.integers(1, 7)))
        ]
        counts.add(build_matrix(d, specs).values.shape[0])
    assert counts == {60 - MAX_LOOKBACK}


def test_build_matrix_feature_cap():
    d = _dataset(np.arange(30.0))
    specs = [FeatureSpec("Returns", 0, 2, 1)] * 7
    with pytest.raises(TooManyFeatures):
        build_matrix(d, specs)
    # disabled slots do not count toward the cap
    specs = [FeatureSpec("Returns", 0, 2, 1)] * 6 + [FeatureSpec("Returns", 0, 2, -1)]
    assert build_matrix(d, specs).values.shape[1] == 6


def test_build_matrix_unknown_series():
    d = _dataset(np.arange(30.0))
    with pytest.raises(UnknownSeries):
        build_matrix(d, [FeatureSpec("nope", 0, 2, 1)])


def test_build_matrix_lookback_too_small_for_spec():
    d = _dataset(np.arange(30.0))
    with pytest.raises(InsufficientHistory):
        build_matrix(d, [FeatureSpec("Returns", 3, 4, 1)], max_lookback=3)


def test_build_matrix_counts_degenerate_pctch():
    vals = np.ones(20)
    vals[14] = 0.0  # first element of the w0=0, wl=2 window at row 15
    d = _dataset(vals)
    m = build_matrix(d, [FeatureSpec("Returns", 0, 2, 11)])
    assert m.degenerate_pctch == 1
    assert np.isfinite(m.values).all()
