from __future__ import annotations

import math

import numpy as np
import pandas as pd
from loguru import logger
from numpy.lib.stride_tricks import sliding_window_view
from pyrsistent import PClass, field, pmap_field, pvector, pvector_field
from toolz import functoolz, partial

from foresight.indicators import FeatureTable
from foresight.random import generator

DEFAULT_TRAIN_FRACTION = 0.8
DEFAULT_SEQUENCE_LENGTHS = (5, 10, 30, 60)


class PipelineError(ValueError):
    ...


class Scaler(PClass):
    """Per-column min and max fitted on the training rows."""

    columns = pvector_field(str)
    minimums = pmap_field(str, float)
    maximums = pmap_field(str, float)

    def __invariant__(self):
        return (
            (set(self.minimums.keys()) == set(self.columns), "minimums must cover exactly the scaler columns"),
            (set(self.maximums.keys()) == set(self.columns), "maximums must cover exactly the scaler columns"),
            (
                all(self.maximums[column] >= self.minimums[column] for column in self.columns),
                "every maximum must be >= its minimum",
            ),
        )

    @property
    def constant_columns(self) -> list[str]:
        return [column for column in self.columns if self.maximums[column] == self.minimums[column]]

    def bounds(self, column):
        if column not in self.minimums:
            raise PipelineError(f"Column '{column}' was not fitted by the scaler")
        return self.minimums[column], self.maximums[column]


class WindowSpec(PClass):
    seq_len = field(type=int, mandatory=True, invariant=lambda value: (value >= 1, "seq_len must be positive"))
    horizon = field(type=int, initial=1, invariant=lambda value: (value == 1, "only one-step horizons are supported"))


class WindowedDataset(PClass):
    """Samples ``inputs[i]`` of shape ``(seq_len, n_features)`` with next-step target ``targets[i]``.

    Row ``k`` of ``inputs[i]`` is the bar ``seq_len - k`` trading days before ``target_dates[i]``.
    """

    inputs = field(type=np.ndarray, mandatory=True)
    targets = field(type=np.ndarray, mandatory=True)
    target_dates = field(type=pd.DatetimeIndex, mandatory=True)
    feature_names = pvector_field(str)
    target_column = field(type=str, mandatory=True)
    seq_len = field(type=int, mandatory=True)
    normalized = field(type=bool, initial=False)

    def __invariant__(self):
        return (
            (self.inputs.ndim == 3, "inputs must have shape (samples, seq_len, features)"),
            (len(self.targets) == len(self.inputs) == len(self.target_dates), "sample arrays must align"),
            (self.inputs.shape[1:] == (self.seq_len, len(self.feature_names)), "inputs do not match seq_len"),
        )

    def __len__(self):
        return len(self.targets)

    @property
    def n_features(self) -> int:
        return len(self.feature_names)

    @property
    def target_index(self) -> int:
        return list(self.feature_names).index(self.target_column)

    def take(self, indices) -> "WindowedDataset":
        indices = np.asarray(indices, dtype=np.int64)
        return self.set(
            inputs=self.inputs[indices],
            targets=self.targets[indices],
            target_dates=self.target_dates[indices],
        )


def chronological_split(table: FeatureTable, train_fraction: float = DEFAULT_TRAIN_FRACTION):
    if not 0.0 < train_fraction < 1.0:
        raise PipelineError(f"train_fraction must lie in (0, 1), got {train_fraction}")

    train_size = math.floor(len(table) * train_fraction)
    if train_size == 0 or train_size == len(table):
        raise PipelineError(
            f"Splitting {len(table)} rows at {train_fraction} leaves an empty side ({train_size} train rows)"
        )
    return table.slice(0, train_size), table.slice(train_size, len(table))


def fit_minmax(train: FeatureTable) -> Scaler:
    if len(train) == 0:
        raise PipelineError("Cannot fit a scaler on an empty table")

    minimums = train.frame.min(axis=0)
    maximums = train.frame.max(axis=0)
    scaler = Scaler(
        columns=pvector(train.columns),
        minimums={column: float(minimums[column]) for column in train.columns},
        maximums={column: float(maximums[column]) for column in train.columns},
    )
    for column in scaler.constant_columns:
        logger.warning(f"{train.symbol}: column {column} is constant on the training split and maps to 0")
    return scaler


def apply_minmax(scaler: Scaler, table: FeatureTable) -> FeatureTable:
    """``(x - min) / (max - min)`` per column; constant columns map to 0. Values may leave [0, 1]."""
    normalized = {}
    for column in table.columns:
        minimum, maximum = scaler.bounds(column)
        values = table.column(column)
        if maximum == minimum:
            normalized[column] = np.zeros_like(values)
        else:
            normalized[column] = (values - minimum) / (maximum - minimum)

    frame = pd.DataFrame(normalized, index=table.frame.index, columns=table.columns)
    return table.set(frame=frame, normalized=True)


def invert_minmax(scaler: Scaler, column_name: str, values) -> np.ndarray:
    minimum, maximum = scaler.bounds(column_name)
    return np.asarray(values, dtype=np.float64) * (maximum - minimum) + minimum


def make_windows(table: FeatureTable, spec: WindowSpec) -> WindowedDataset:
    seq_len = spec.seq_len
    if len(table) <= seq_len:
        raise PipelineError(f"{table.symbol}: {len(table)} rows cannot form windows of length {seq_len}")

    values = table.frame.to_numpy(dtype=np.float64)
    windows = sliding_window_view(values, seq_len, axis=0)[: len(values) - seq_len]
    inputs = np.ascontiguousarray(np.swapaxes(windows, 1, 2))
    targets = table.column(table.target_column)[seq_len:].copy()

    return WindowedDataset(
        inputs=inputs,
        targets=targets,
        target_dates=table.dates[seq_len:],
        feature_names=pvector(table.columns),
        target_column=table.target_column,
        seq_len=seq_len,
        normalized=table.normalized,
    )


def shuffle_once(dataset: WindowedDataset, seed: int) -> WindowedDataset:
    permutation = generator(seed, "shuffle").permutation(len(dataset))
    return dataset.take(permutation)


class PreparedData(PClass):
    train_table = field(type=FeatureTable, mandatory=True)
    test_table = field(type=FeatureTable, mandatory=True)
    scaler = field(type=Scaler, mandatory=True)
    train = field(type=WindowedDataset, mandatory=True)
    test = field(type=WindowedDataset, mandatory=True)


def prepare(table: FeatureTable, spec: WindowSpec, *, train_fraction=DEFAULT_TRAIN_FRACTION) -> PreparedData:
    """Split rows, fit the scaler on the training rows and window both sides in chronological order.

    The training windows are shuffled by the trainer, not here.
    """
    train_table, test_table = chronological_split(table, train_fraction)
    scaler = fit_minmax(train_table)

    window = partial(make_windows, spec=spec)
    train = functoolz.pipe(train_table, partial(apply_minmax, scaler), window)
    test = functoolz.pipe(test_table, partial(apply_minmax, scaler), window)

    logger.info(
        f"{table.symbol}: {len(train_table)} train rows / {len(test_table)} test rows, "
        f"{len(train)} / {len(test)} windows of length {spec.seq_len}"
    )
    return PreparedData(train_table=train_table, test_table=test_table, scaler=scaler, train=train, test=test)


__all__ = [
    "DEFAULT_SEQUENCE_LENGTHS",
    "PipelineError",
    "PreparedData",
    "Scaler",
    "WindowSpec",
    "WindowedDataset",
    "apply_minmax",
    "chronological_split",
    "fit_minmax",
    "invert_minmax",
    "make_windows",
    "prepare",
    "shuffle_once",
]
