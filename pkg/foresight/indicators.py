"""Technical indicators and the model-ready feature table.

Every indicator returns an ``IndicatorSeries`` aligned with its input. Values that need more
history than is available (the warm-up prefix) are ``pd.NA``; once an indicator is defined it stays
defined.
"""
from __future__ import annotations

import numpy as np
import pandas as pd
from loguru import logger
from numpy.lib.stride_tricks import sliding_window_view
from pyrsistent import PClass, field

from foresight.market_data import NUMERIC_COLUMNS, OhlcvSeries

EMA_WINDOWS = (25, 50, 100, 200, 300)
RSI_WINDOW = 14
ATR_WINDOW = 14
BOLLINGER_WINDOW = 20
BOLLINGER_K = 2.0
TENKAN_WINDOW = 9
KIJUN_WINDOW = 26
SENKOU_B_WINDOW = 52
ICHIMOKU_SHIFT = 26
MACD_FAST = 12
MACD_SLOW = 26
MACD_SIGNAL = 9
MA_WINDOWS = (200, 300)

INDICATOR_COLUMNS = (
    *(f"EMA_{window}" for window in EMA_WINDOWS),
    "RSI_14",
    "ATR_14",
    "BB_Middle",
    "BB_Upper",
    "BB_Lower",
    "Tenkan_Sen",
    "Kijun_Sen",
    "Senkou_Span_A",
    "Senkou_Span_B",
    "Chikou_Span",
    "MACD",
    "MACD_Signal",
    "MACD_Histogram",
    *(f"MA_{window}" for window in MA_WINDOWS),
)
CANONICAL_COLUMNS = (*NUMERIC_COLUMNS, *INDICATOR_COLUMNS)


class WarmupError(ValueError):
    def __init__(self, message, *, column, required_length):
        super().__init__(message)
        self.column = column
        self.required_length = required_length


def _has_contiguous_absent_prefix(values) -> bool:
    absent = np.asarray(values.isna())
    if not absent.any():
        return True
    first_defined = np.argmin(absent) if not absent.all() else len(absent)
    return bool(absent[:first_defined].all() and not absent[first_defined:].any())


class IndicatorSeries(PClass):
    name = field(type=str, mandatory=True)
    values = field(
        type=pd.Series,
        mandatory=True,
        invariant=lambda values: (_has_contiguous_absent_prefix(values), "absent values must form a prefix"),
    )

    def __len__(self):
        return len(self.values)

    @property
    def first_defined_index(self) -> int:
        """Length of the warm-up prefix; equals ``len(self)`` when nothing is defined."""
        absent = np.asarray(self.values.isna())
        return int(len(absent) if absent.all() else np.argmin(absent))

    def to_numpy(self) -> np.ndarray:
        return self.values.to_numpy(dtype=np.float64, na_value=np.nan)


def _indicator(name, array) -> IndicatorSeries:
    return IndicatorSeries(name=name, values=pd.Series(pd.array(array, dtype="Float64"), name=name))


def _as_array(values) -> np.ndarray:
    if isinstance(values, IndicatorSeries):
        return values.to_numpy()
    return np.asarray(values, dtype=np.float64)


def _check_window(window):
    if window < 1:
        raise ValueError(f"window must be a positive integer, got {window}")


def _check_lengths(*arrays):
    lengths = {len(array) for array in arrays}
    if len(lengths) != 1:
        raise ValueError(f"input sequences must have equal lengths, got {sorted(lengths)}")


def _rolling(values, window, reduce) -> np.ndarray:
    output = np.full(len(values), np.nan)
    if window <= len(values):
        output[window - 1 :] = reduce(sliding_window_view(values, window), axis=-1)
    return output


def _ema_array(values, window) -> np.ndarray:
    output = np.full(len(values), np.nan)
    defined = np.flatnonzero(~np.isnan(values))
    if len(defined) < window:
        return output

    start = defined[0]
    alpha = 2.0 / (window + 1)
    seed_index = start + window - 1
    output[seed_index] = np.mean(values[start : seed_index + 1])
    for index in range(seed_index + 1, len(values)):
        output[index] = alpha * values[index] + (1.0 - alpha) * output[index - 1]
    return output


def _wilder_array(terms, window) -> np.ndarray:
    """Wilder smoothing of ``terms[1:]``; the first value sits at index ``window``."""
    output = np.full(len(terms), np.nan)
    if len(terms) < window + 1:
        return output

    output[window] = np.mean(terms[1 : window + 1])
    for index in range(window + 1, len(terms)):
        output[index] = (output[index - 1] * (window - 1) + terms[index]) / window
    return output


def sma(values, window: int) -> IndicatorSeries:
    _check_window(window)
    return _indicator(f"SMA_{window}", _rolling(_as_array(values), window, np.mean))


def ema(values, window: int) -> IndicatorSeries:
    """Exponential moving average with ``alpha = 2 / (window + 1)``, seeded by the SMA of the first window."""
    _check_window(window)
    return _indicator(f"EMA_{window}", _ema_array(_as_array(values), window))


def rsi(close, window: int = RSI_WINDOW) -> IndicatorSeries:
    _check_window(window)
    close = _as_array(close)

    differences = np.concatenate([[0.0], np.diff(close)])
    average_gain = _wilder_array(np.maximum(differences, 0.0), window)
    average_loss = _wilder_array(np.maximum(-differences, 0.0), window)

    output = np.full(len(close), np.nan)
    defined = ~np.isnan(average_gain)
    with np.errstate(divide="ignore", invalid="ignore"):
        relative_strength = average_gain / average_loss
        output[defined] = 100.0 - 100.0 / (1.0 + relative_strength[defined])
    output[defined & (average_gain == 0.0)] = 0.0
    output[defined & (average_loss == 0.0)] = 100.0
    return _indicator(f"RSI_{window}", output)


def atr(high, low, close, window: int = ATR_WINDOW) -> IndicatorSeries:
    _check_window(window)
    high, low, close = map(_as_array, (high, low, close))
    _check_lengths(high, low, close)

    true_range = np.zeros(len(close))
    if len(close) > 1:
        previous_close = close[:-1]
        true_range[1:] = np.maximum.reduce(
            [high[1:] - low[1:], np.abs(high[1:] - previous_close), np.abs(low[1:] - previous_close)]
        )
    return _indicator(f"ATR_{window}", _wilder_array(true_range, window))


def bollinger(close, window: int = BOLLINGER_WINDOW, k: float = BOLLINGER_K):
    """Middle, upper and lower bands; the band width uses the population standard deviation."""
    _check_window(window)
    close = _as_array(close)

    middle = _rolling(close, window, np.mean)
    deviation = _rolling(close, window, np.std)
    return (
        _indicator("BB_Middle", middle),
        _indicator("BB_Upper", middle + k * deviation),
        _indicator("BB_Lower", middle - k * deviation),
    )


def _midpoint(high, low, window) -> np.ndarray:
    return (_rolling(high, window, np.max) + _rolling(low, window, np.min)) / 2.0


def _shift(values, periods) -> np.ndarray:
    output = np.full(len(values), np.nan)
    if periods < len(values):
        output[periods:] = values[: len(values) - periods]
    return output


def ichimoku(high, low, close):
    """Tenkan, Kijun, Senkou A, Senkou B and Chikou lines.

    The Senkou spans stored at row ``i`` were computed from data ending at ``i - 26``. Chikou at row
    ``i`` is ``close[i]``, the latest close known at that time.
    """
    high, low, close = map(_as_array, (high, low, close))
    _check_lengths(high, low, close)

    tenkan = _midpoint(high, low, TENKAN_WINDOW)
    kijun = _midpoint(high, low, KIJUN_WINDOW)
    senkou_a = _shift((tenkan + kijun) / 2.0, ICHIMOKU_SHIFT)
    senkou_b = _shift(_midpoint(high, low, SENKOU_B_WINDOW), ICHIMOKU_SHIFT)
    return (
        _indicator("Tenkan_Sen", tenkan),
        _indicator("Kijun_Sen", kijun),
        _indicator("Senkou_Span_A", senkou_a),
        _indicator("Senkou_Span_B", senkou_b),
        _indicator("Chikou_Span", close.copy()),
    )


def macd(close, fast: int = MACD_FAST, slow: int = MACD_SLOW, signal: int = MACD_SIGNAL):
    if fast >= slow:
        raise ValueError(f"MACD fast window must be shorter than the slow window, got {fast} >= {slow}")
    _check_window(fast)
    _check_window(signal)
    close = _as_array(close)

    macd_line = _ema_array(close, fast) - _ema_array(close, slow)
    signal_line = _ema_array(macd_line, signal)
    return (
        _indicator("MACD", macd_line),
        _indicator("MACD_Signal", signal_line),
        _indicator("MACD_Histogram", macd_line - signal_line),
    )


def warmup_lengths() -> dict[str, int]:
    """Number of leading rows each canonical column leaves absent."""
    lengths = {column: 0 for column in NUMERIC_COLUMNS}
    lengths.update({f"EMA_{window}": window - 1 for window in EMA_WINDOWS})
    lengths.update(
        {
            "RSI_14": RSI_WINDOW,
            "ATR_14": ATR_WINDOW,
            "BB_Middle": BOLLINGER_WINDOW - 1,
            "BB_Upper": BOLLINGER_WINDOW - 1,
            "BB_Lower": BOLLINGER_WINDOW - 1,
            "Tenkan_Sen": TENKAN_WINDOW - 1,
            "Kijun_Sen": KIJUN_WINDOW - 1,
            "Senkou_Span_A": max(TENKAN_WINDOW, KIJUN_WINDOW) - 1 + ICHIMOKU_SHIFT,
            "Senkou_Span_B": SENKOU_B_WINDOW - 1 + ICHIMOKU_SHIFT,
            "Chikou_Span": 0,
            "MACD": MACD_SLOW - 1,
            "MACD_Signal": MACD_SLOW - 1 + MACD_SIGNAL - 1,
            "MACD_Histogram": MACD_SLOW - 1 + MACD_SIGNAL - 1,
        }
    )
    lengths.update({f"MA_{window}": window - 1 for window in MA_WINDOWS})
    return {column: lengths[column] for column in CANONICAL_COLUMNS}


def compute_indicators(series: OhlcvSeries) -> dict[str, IndicatorSeries]:
    frame = series.to_frame()
    high, low, close = (frame[column].to_numpy() for column in ("high", "low", "close"))

    indicators = [ema(close, window) for window in EMA_WINDOWS]
    indicators.append(rsi(close, RSI_WINDOW))
    indicators.append(atr(high, low, close, ATR_WINDOW))
    indicators.extend(bollinger(close, BOLLINGER_WINDOW, BOLLINGER_K))
    indicators.extend(ichimoku(high, low, close))
    indicators.extend(macd(close, MACD_FAST, MACD_SLOW, MACD_SIGNAL))
    indicators.extend(
        indicator.set(name=f"MA_{window}")
        for window, indicator in zip(MA_WINDOWS, (sma(close, window) for window in MA_WINDOWS))
    )

    named = {indicator.name: indicator for indicator in indicators}
    return {column: named[column] for column in INDICATOR_COLUMNS}


class FeatureTable(PClass):
    """Date-indexed float64 frame with the canonical columns and no absent values."""

    symbol = field(type=str, mandatory=True)
    frame = field(type=pd.DataFrame, mandatory=True)
    target_column = field(type=str, initial="close")
    normalized = field(type=bool, initial=False)

    def __invariant__(self):
        return (
            (self.target_column in self.frame.columns, f"target column '{self.target_column}' is not a column"),
            (not self.frame.isna().any().any(), "feature table must not contain absent values"),
        )

    def __len__(self):
        return len(self.frame)

    @property
    def dates(self) -> pd.DatetimeIndex:
        return self.frame.index

    @property
    def columns(self) -> list[str]:
        return list(self.frame.columns)

    def column(self, name: str) -> np.ndarray:
        return self.frame[name].to_numpy(dtype=np.float64)

    def slice(self, start: int, stop: int) -> "FeatureTable":
        return self.set(frame=self.frame.iloc[start:stop])


def build_feature_table(series: OhlcvSeries, target_column: str = "close") -> FeatureTable:
    """Raw bars plus every indicator, with the warm-up rows dropped."""
    warmups = warmup_lengths()
    warmup = max(warmups.values())
    if len(series) <= warmup:
        column = next(column for column, length in warmups.items() if length == warmup)
        required_length = warmup + 1
        raise WarmupError(
            f"{series.symbol}: {len(series)} bars cannot cover the {column} warm-up; "
            f"at least {required_length} are required",
            column=column,
            required_length=required_length,
        )

    frame = series.to_frame()
    for column, indicator in compute_indicators(series).items():
        frame[column] = indicator.to_numpy()
    frame = frame[list(CANONICAL_COLUMNS)].iloc[warmup:]

    logger.info(f"{series.symbol}: built feature table with {len(frame)} rows and {len(frame.columns)} columns")
    return FeatureTable(symbol=series.symbol, frame=frame, target_column=target_column)


__all__ = [
    "CANONICAL_COLUMNS",
    "FeatureTable",
    "INDICATOR_COLUMNS",
    "IndicatorSeries",
    "WarmupError",
    "atr",
    "bollinger",
    "build_feature_table",
    "compute_indicators",
    "ema",
    "ichimoku",
    "macd",
    "rsi",
    "sma",
    "warmup_lengths",
]
