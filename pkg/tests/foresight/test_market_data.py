import datetime

import pytest

import numpy as np

from foresight.market_data import (
    Bar,
    MarketDataError,
    OhlcvSeries,
    parse_ohlcv_csv,
    synthetic_series,
    validate_series,
    write_ohlcv_csv,
)

HEADER = "date,open,high,low,close,volume\n"


def write_csv(tmp_path, rows, header=HEADER):
    path = tmp_path / "bars.csv"
    path.write_text(header + "".join(f"{row}\n" for row in rows), encoding="utf-8")
    return path


def make_bar(day, open=10.0, high=11.0, low=9.0, close=10.5, volume=1000.0):
    date = datetime.date(2020, 1, 1) + datetime.timedelta(days=day)
    return Bar(date=date, open=open, high=high, low=low, close=close, volume=volume)


def test_parse_sorts_rows_by_date(tmp_path):
    path = write_csv(
        tmp_path,
        [
            "2020-01-03,10,11,9,10.5,100",
            "2020-01-01,10,11,9,10.5,100",
            "2020-01-02,10,12,9,11,200.5",
        ],
    )
    series = parse_ohlcv_csv(path, "ACME")

    assert len(series) == 3
    assert series.symbol == "ACME"
    assert series.dates == [datetime.date(2020, 1, day) for day in (1, 2, 3)]
    assert series.bars[1].high == 12.0
    assert series.bars[1].volume == 200.5


def test_parse_recovers_seventeen_digit_values_exactly(tmp_path):
    row = "2020-01-01,9.975603729795505,10.000000000000002,9.1000000000000014,9.975603729795504,100"
    path = write_csv(tmp_path, [row])
    (bar,) = parse_ohlcv_csv(path, "ACME").bars

    assert bar.open == 9.975603729795505
    assert bar.high == 10.000000000000002
    assert bar.low == 9.1000000000000014
    assert bar.close == 9.975603729795504


def test_low_above_high_is_rejected(tmp_path):
    path = write_csv(tmp_path, ["2020-01-01,10,11,9,10.5,100", "2020-01-02,6,5,9,6,100"])
    with pytest.raises(MarketDataError) as error:
        parse_ohlcv_csv(path, "ACME")

    assert "low ≤ high violated at row 1" in str(error.value)
    assert error.value.row == 1
    assert not error.value.report.accepted


def test_duplicate_date_is_rejected(tmp_path):
    path = write_csv(tmp_path, ["2020-01-02,10,11,9,10.5,100", "2020-01-02,10,11,9,10.5,100"])
    with pytest.raises(MarketDataError) as error:
        parse_ohlcv_csv(path, "ACME")
    assert "duplicate date" in str(error.value)
    assert error.value.rule == "duplicate_date"


@pytest.mark.parametrize(
    "header, column",
    [
        ("date,open,high,low,close\n", "volume"),
        ("date,open,high,lo,close,volume\n", "low"),
        ("day,open,high,low,close,volume\n", "date"),
    ],
)
def test_missing_or_renamed_column(tmp_path, header, column):
    path = write_csv(tmp_path, ["2020-01-01,10,11,9,10.5"], header=header)
    with pytest.raises(MarketDataError) as error:
        parse_ohlcv_csv(path, "ACME")
    assert error.value.column == column


@pytest.mark.parametrize(
    "row, column",
    [
        ("2020-01-02,10,11,abc,10.5,100", "low"),
        ("2020-13-02,10,11,9,10.5,100", "date"),
        ("02/01/2020,10,11,9,10.5,100", "date"),
        ("2020-01-02,10,,9,10.5,100", "high"),
        ("2020-01-02,10,11,9,nan,100", "close"),
        ("2020-01-02,10,11,9,10.5,inf", "volume"),
    ],
)
def test_unparseable_value_names_row_and_column(tmp_path, row, column):
    path = write_csv(tmp_path, ["2020-01-01,10,11,9,10.5,100", row])
    with pytest.raises(MarketDataError) as error:
        parse_ohlcv_csv(path, "ACME")
    assert error.value.row == 1
    assert error.value.column == column


@pytest.mark.parametrize("content", ["", HEADER])
def test_empty_file(tmp_path, content):
    path = tmp_path / "empty.csv"
    path.write_text(content, encoding="utf-8")
    with pytest.raises(MarketDataError):
        parse_ohlcv_csv(path, "ACME")


def test_valid_series_has_empty_report():
    series = OhlcvSeries(symbol="ACME", bars=[make_bar(day) for day in range(5)])
    report = validate_series(series)
    assert report.accepted
    assert len(report.errors) == 0
    assert len(report.warnings) == 0


def test_zero_close_is_one_error():
    bars = [make_bar(day) for day in range(10)]
    bars[7] = make_bar(7, open=1.0, high=1.0, low=0.0, close=0.0)
    report = validate_series(OhlcvSeries(symbol="ACME", bars=bars))

    assert len(report.errors) == 1
    assert report.errors[0].row == 7
    assert report.errors[0].rule == "positive_price"


def test_long_calendar_gap_is_a_warning():
    bars = [make_bar(0), make_bar(30), make_bar(31)]
    report = validate_series(OhlcvSeries(symbol="ACME", bars=bars))
    assert report.accepted
    assert len(report.warnings) == 1
    assert report.warnings[0].rule == "calendar_gap"
    assert report.warnings[0].row == 1


@pytest.mark.parametrize(
    "kwargs, rule",
    [
        ({"volume": -1.0}, "non_negative_volume"),
        ({"open": 12.0}, "high_ge_open_close"),
        ({"close": 8.0}, "low_le_open_close"),
    ],
)
def test_bar_rules(kwargs, rule):
    report = validate_series(OhlcvSeries(symbol="ACME", bars=[make_bar(0, **kwargs)]))
    assert [finding.rule for finding in report.errors] == [rule]


def test_empty_series_is_an_error():
    report = validate_series(OhlcvSeries(symbol="ACME", bars=[]))
    assert not report.accepted


def test_out_of_order_series_is_an_error():
    report = validate_series(OhlcvSeries(symbol="ACME", bars=[make_bar(1), make_bar(0)]))
    assert [finding.rule for finding in report.errors] == ["increasing_dates"]


def test_write_then_parse_round_trip(tmp_path):
    series = synthetic_series(50, seed=3)
    first = parse_ohlcv_csv(write_ohlcv_csv(series, tmp_path / "first.csv"), "SYNTH")
    second = parse_ohlcv_csv(write_ohlcv_csv(first, tmp_path / "second.csv"), "SYNTH")

    assert first == series
    assert second == first
    assert (tmp_path / "first.csv").read_bytes() == (tmp_path / "second.csv").read_bytes()


@pytest.mark.parametrize("seed", [0, 1])
def test_synthetic_series_is_valid_and_deterministic(seed):
    series = synthetic_series(300, seed=seed)
    report = validate_series(series)

    assert report.accepted
    assert len(report.warnings) == 0
    assert series == synthetic_series(300, seed=seed)
    assert all(date.weekday() < 5 for date in series.dates)

    close = np.array([bar.close for bar in series.bars])
    trend = 10.0 + 0.01 * np.arange(300) + np.sin(2 * np.pi * np.arange(300) / 20)
    assert np.max(np.abs(close - trend)) < 0.5
