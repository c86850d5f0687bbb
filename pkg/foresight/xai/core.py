from __future__ import annotations

import math

import numpy as np
from pyrsistent import PClass, field, pmap_field, pvector, pvector_field

METHODS = ("exact_shapley", "kernel_shap", "lime")


class AttributionError(ValueError):
    ...


class FeatureName(PClass):
    """One window cell: a feature column at a lag, where lag 1 is the most recent row."""

    column = field(type=str, mandatory=True)
    lag = field(type=int, mandatory=True, invariant=lambda lag: (lag >= 1, "lag must be at least 1"))

    def __str__(self):
        return f"{self.column}_t{self.lag}"


def feature_names(columns, seq_len) -> list[str]:
    """Column-major names with lags descending inside each column, matching ``flatten_window``."""
    return [str(FeatureName(column=column, lag=lag)) for column in columns for lag in range(seq_len, 0, -1)]


def flatten_window(window, columns=None):
    """Flattens an ``(L, C)`` window, or a batch ``(B, L, C)`` of them, into ``L * C`` features.

    Returns the flat values and, when ``columns`` is given, the aligned feature names.
    """
    window = np.asarray(window, dtype=np.float64)
    if window.ndim not in (2, 3):
        raise AttributionError(f"Expected a window (L, C) or a batch (B, L, C), got shape {window.shape}")
    seq_len, n_features = window.shape[-2:]
    if columns is not None and len(columns) != n_features:
        raise AttributionError(f"{len(columns)} column names for a window with {n_features} columns")

    flat = np.swapaxes(window, -1, -2).reshape(*window.shape[:-2], seq_len * n_features)
    if columns is None:
        return flat
    return flat, feature_names(columns, seq_len)


def unflatten_window(flat, seq_len, n_features) -> np.ndarray:
    flat = np.asarray(flat, dtype=np.float64)
    if flat.shape[-1] != seq_len * n_features:
        raise AttributionError(f"Cannot unflatten {flat.shape[-1]} values into ({seq_len}, {n_features})")
    return np.swapaxes(flat.reshape(*flat.shape[:-1], n_features, seq_len), -1, -2)


class Attribution(PClass):
    method = field(type=str, mandatory=True, invariant=lambda method: (method in METHODS, f"unknown method {method}"))
    feature_scores = pmap_field(str, float)
    base_value = field(type=float, mandatory=True, factory=float)
    prediction = field(type=float, mandatory=True, factory=float)
    n_samples = field(type=int, initial=0)
    residual = field(type=float, initial=0.0, factory=float)
    target_date = field(type=(str, type(None)), initial=None)

    def __invariant__(self):
        if self.method == "lime":
            return (True, "")
        total = self.base_value + math.fsum(self.feature_scores.values())
        return (
            abs(total - self.prediction) <= 1e-6 * max(1.0, abs(self.prediction)),
            f"base value plus scores {total} does not add up to the prediction {self.prediction}",
        )

    def ranked(self) -> list[tuple[str, float]]:
        """Scores by descending magnitude, ties in lexicographic order of the feature name."""
        return sorted(self.feature_scores.items(), key=lambda item: (-abs(item[1]), item[0]))


class GlobalSummary(PClass):
    """Mean absolute attribution per feature, ranked from most to least important."""

    mean_abs = pmap_field(str, float)
    ranking = pvector_field(str)
    n_instances = field(type=int, mandatory=True)

    def __invariant__(self):
        return (
            (all(value >= 0 for value in self.mean_abs.values()), "mean absolute scores must be non-negative"),
            (sorted(self.ranking) == sorted(self.mean_abs.keys()), "ranking must cover every feature once"),
        )

    def top(self, count) -> list[tuple[str, float]]:
        return [(name, self.mean_abs[name]) for name in self.ranking[:count]]


def global_shap_summary(attributions) -> GlobalSummary:
    attributions = list(attributions)
    if not attributions:
        raise AttributionError("global_shap_summary needs at least one attribution")

    names = sorted(attributions[0].feature_scores.keys())
    for attribution in attributions[1:]:
        if sorted(attribution.feature_scores.keys()) != names:
            raise AttributionError("Attributions do not share the same feature names")

    scores = np.array([[attribution.feature_scores[name] for name in names] for attribution in attributions])
    mean_abs = dict(zip(names, np.mean(np.abs(scores), axis=0).tolist()))
    ranking = sorted(names, key=lambda name: (-mean_abs[name], name))
    return GlobalSummary(mean_abs=mean_abs, ranking=pvector(ranking), n_instances=len(attributions))


def evaluate_model(model_fn, inputs) -> np.ndarray:
    outputs = np.asarray(model_fn(inputs), dtype=np.float64).reshape(-1)
    if outputs.shape[0] != inputs.shape[0]:
        raise AttributionError(f"model_fn returned {outputs.shape[0]} outputs for {inputs.shape[0]} inputs")
    if not np.all(np.isfinite(outputs)):
        raise AttributionError("model_fn returned a non-finite output")
    return outputs


def check_instance(x, background=None):
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1 or x.size == 0:
        raise AttributionError(f"Expected a non-empty flat instance, got shape {x.shape}")
    if background is None:
        return x, None
    background = np.asarray(background, dtype=np.float64)
    if background.shape != x.shape:
        raise AttributionError(f"Background shape {background.shape} does not match instance shape {x.shape}")
    return x, background


def default_names(num_features, names=None) -> list[str]:
    if names is None:
        return [f"x{index}" for index in range(num_features)]
    names = list(names)
    if len(names) != num_features:
        raise AttributionError(f"{len(names)} feature names for {num_features} features")
    return names


__all__ = [
    "Attribution",
    "AttributionError",
    "FeatureName",
    "GlobalSummary",
    "METHODS",
    "feature_names",
    "flatten_window",
    "global_shap_summary",
    "unflatten_window",
]
