from __future__ import annotations

import datetime
from pathlib import Path

import numpy as np
import pandas as pd
from loguru import logger
from pyrsistent import PClass, field, pvector, pvector_field

from foresight.random import generator

COLUMNS = ("date", "open", "high", "low", "close", "volume")
PRICE_COLUMNS = ("open", "high", "low", "close")
NUMERIC_COLUMNS = ("open", "high", "low", "close", "volume")
DATE_FORMAT = "%Y-%m-%d"
MAX_CALENDAR_GAP_DAYS = 10


class Bar(PClass):
    date = field(type=datetime.date, mandatory=True)
    open = field(type=float, mandatory=True, factory=float)
    high = field(type=float, mandatory=True, factory=float)
    low = field(type=float, mandatory=True, factory=float)
    close = field(type=float, mandatory=True, factory=float)
    volume = field(type=float, mandatory=True, factory=float)


class OhlcvSeries(PClass):
    symbol = field(type=str, mandatory=True)
    bars = pvector_field(Bar)

    def __len__(self):
        return len(self.bars)

    @property
    def dates(self) -> list[datetime.date]:
        return [bar.date for bar in self.bars]

    def to_frame(self) -> pd.DataFrame:
        frame = pd.DataFrame(
            {column: [getattr(bar, column) for bar in self.bars] for column in NUMERIC_COLUMNS},
            index=pd.DatetimeIndex([pd.Timestamp(bar.date) for bar in self.bars], name="date"),
            dtype=np.float64,
        )
        return frame

    @classmethod
    def from_frame(cls, symbol: str, frame: pd.DataFrame) -> "OhlcvSeries":
        bars = [
            Bar(date=timestamp.date(), **{column: row[column] for column in NUMERIC_COLUMNS})
            for timestamp, row in frame.iterrows()
        ]
        return cls(symbol=symbol, bars=pvector(bars))


class Finding(PClass):
    row = field(type=(int, type(None)), mandatory=True)
    rule = field(type=str, mandatory=True)
    message = field(type=str, mandatory=True)

    def __str__(self):
        location = f"row {self.row}" if self.row is not None else "series"
        return f"{location}: [{self.rule}] {self.message}"


class ValidationReport(PClass):
    errors = pvector_field(Finding)
    warnings = pvector_field(Finding)

    @property
    def accepted(self) -> bool:
        return len(self.errors) == 0


class MarketDataError(ValueError):
    def __init__(self, message, *, row=None, column=None, rule=None, report=None):
        super().__init__(message)
        self.row = row
        self.column = column
        self.rule = rule
        self.report = report


def _bar_findings(row: int, bar: Bar) -> list[Finding]:
    findings = []
    values = {column: getattr(bar, column) for column in NUMERIC_COLUMNS}

    non_finite = [column for column, value in values.items() if not np.isfinite(value)]
    if non_finite:
        return [Finding(row=row, rule="finite_value", message=f"non-finite value in {', '.join(non_finite)}")]

    non_positive = [column for column in PRICE_COLUMNS if values[column] <= 0]
    if non_positive:
        findings.append(
            Finding(row=row, rule="positive_price", message=f"price must be > 0 in {', '.join(non_positive)}")
        )
    if bar.volume < 0:
        findings.append(Finding(row=row, rule="non_negative_volume", message=f"volume {bar.volume} < 0"))
    if bar.low > bar.high:
        findings.append(Finding(row=row, rule="low_le_high", message=f"low ≤ high violated at row {row}"))
    if bar.low > min(bar.open, bar.close):
        findings.append(
            Finding(row=row, rule="low_le_open_close", message=f"low ≤ min(open, close) violated at row {row}")
        )
    if bar.high < max(bar.open, bar.close):
        findings.append(
            Finding(row=row, rule="high_ge_open_close", message=f"high ≥ max(open, close) violated at row {row}")
        )
    return findings


def validate_series(series: OhlcvSeries) -> ValidationReport:
    errors = []
    warnings = []

    if len(series.bars) == 0:
        errors.append(Finding(row=None, rule="non_empty", message="series has no bars"))

    previous = None
    for row, bar in enumerate(series.bars):
        errors.extend(_bar_findings(row, bar))
        if previous is not None:
            if bar.date == previous.date:
                errors.append(Finding(row=row, rule="duplicate_date", message=f"duplicate date {bar.date}"))
            elif bar.date < previous.date:
                errors.append(
                    Finding(
                        row=row,
                        rule="increasing_dates",
                        message=f"date {bar.date} precedes previous date {previous.date}",
                    )
                )
            else:
                gap = (bar.date - previous.date).days
                if gap > MAX_CALENDAR_GAP_DAYS:
                    warnings.append(
                        Finding(
                            row=row,
                            rule="calendar_gap",
                            message=f"{gap}-day gap after {previous.date}",
                        )
                    )
        previous = bar

    return ValidationReport(errors=pvector(errors), warnings=pvector(warnings))


def _read_raw(path: Path) -> pd.DataFrame:
    try:
        frame = pd.read_csv(path, dtype=str, keep_default_na=False, encoding="utf-8")
    except pd.errors.EmptyDataError:
        raise MarketDataError(f"{path}: file is empty", rule="empty_file") from None

    columns = list(frame.columns)
    for column in COLUMNS:
        if column not in columns:
            raise MarketDataError(
                f"{path}: missing column '{column}' in header", row=None, column=column, rule="schema"
            )
    for column in columns:
        if column not in COLUMNS:
            raise MarketDataError(f"{path}: unexpected column '{column}' in header", column=column, rule="schema")
    if len(frame) == 0:
        raise MarketDataError(f"{path}: file has no data rows", row=0, rule="empty_file")
    return frame


def _to_float(values: pd.Series) -> pd.Series:
    def convert(text):
        try:
            return float(text)
        except ValueError:
            return np.nan

    return values.map(convert).astype(np.float64)


def _parse_column(path, frame, column, parse):
    parsed = parse(frame[column])
    invalid = parsed.isna()
    if column != "date":
        invalid |= ~np.isfinite(parsed.to_numpy(dtype=np.float64, na_value=np.nan))
    if invalid.any():
        row = int(np.flatnonzero(invalid.to_numpy())[0])
        value = frame[column].iloc[row]
        raise MarketDataError(
            f"{path}: cannot parse {column} value '{value}' at row {row}", row=row, column=column, rule="parse"
        )
    return parsed


def parse_ohlcv_csv(path, symbol: str) -> OhlcvSeries:
    """Reads ``date,open,high,low,close,volume`` rows, sorts them by date and validates them.

    Rows may arrive in any order. Any validation error (including duplicate dates) rejects the
    whole file; calendar-gap warnings are logged.
    """
    path = Path(path)
    frame = _read_raw(path)

    dates = _parse_column(
        path, frame, "date", lambda column: pd.to_datetime(column, format=DATE_FORMAT, errors="coerce")
    )
    parsed = pd.DataFrame(
        {
            column: _parse_column(path, frame, column, _to_float)
            for column in NUMERIC_COLUMNS
        },
        dtype=np.float64,
    )
    parsed.index = pd.DatetimeIndex(dates, name="date")
    parsed = parsed.sort_index(kind="stable")

    series = OhlcvSeries.from_frame(symbol, parsed)
    report = validate_series(series)
    for warning in report.warnings:
        logger.warning(f"{symbol}: {warning}")
    if not report.accepted:
        first = report.errors[0]
        raise MarketDataError(f"{path}: {first.message}", row=first.row, rule=first.rule, report=report)

    logger.info(f"Parsed {len(series)} bars for {symbol} from {path}")
    return series


def write_ohlcv_csv(series: OhlcvSeries, path) -> Path:
    path = Path(path)
    frame = series.to_frame()
    frame.index = frame.index.strftime(DATE_FORMAT)
    frame.to_csv(path, float_format="%.17g", lineterminator="\n")
    return path


def synthetic_series(
    num_bars: int,
    *,
    seed: int = 0,
    noise: float = 0.05,
    symbol: str = "SYNTH",
    start: str = "2015-01-02",
) -> OhlcvSeries:
    """Benchmark series ``close = 10 + 0.01 t + sin(2 pi t / 20) + noise``, one bar per business day."""
    rng = generator(seed, "synthetic_series")
    time = np.arange(num_bars, dtype=np.float64)
    close = 10.0 + 0.01 * time + np.sin(2.0 * np.pi * time / 20.0) + noise * rng.standard_normal(num_bars)
    open = np.concatenate([close[:1], close[:-1]])
    spread = 0.02 + 0.05 * np.abs(rng.standard_normal(num_bars))
    high = np.maximum(open, close) + spread
    low = np.minimum(open, close) - spread
    volume = 1e6 * (1.0 + 0.1 * rng.random(num_bars))

    frame = pd.DataFrame(
        {"open": open, "high": high, "low": low, "close": close, "volume": volume},
        index=pd.bdate_range(start=start, periods=num_bars, name="date"),
    )
    return OhlcvSeries.from_frame(symbol, frame)


__all__ = [
    "Bar",
    "Finding",
    "MarketDataError",
    "OhlcvSeries",
    "ValidationReport",
    "parse_ohlcv_csv",
    "synthetic_series",
    "validate_series",
    "write_ohlcv_csv",
]
