from __future__ import annotations

import math

import numpy as np
from loguru import logger
from pyrsistent import PClass, field
from sklearn.linear_model import Ridge

from foresight.random import generator
from foresight.xai.core import Attribution, AttributionError, check_instance, default_names, evaluate_model

MIN_TOTAL_WEIGHT = 1e-12


def _optional_float(value):
    return None if value is None else float(value)


class LimeConfig(PClass):
    n_perturb = field(type=int, initial=5000, invariant=lambda value: (value >= 2, "n_perturb must be at least 2"))
    kernel_width = field(type=(float, type(None)), initial=None, factory=_optional_float)
    top_k = field(type=int, initial=10, invariant=lambda value: (value >= 1, "top_k must be positive"))
    ridge_alpha = field(type=float, initial=1e-3, factory=float)
    seed = field(type=int, initial=0)

    def resolved_kernel_width(self, num_features) -> float:
        return 0.75 * math.sqrt(num_features) if self.kernel_width is None else self.kernel_width


class FeatureStats(PClass):
    """Per-feature mean and standard deviation of the reference (training) instances."""

    means = field(type=np.ndarray, mandatory=True)
    stds = field(type=np.ndarray, mandatory=True)

    @classmethod
    def from_instances(cls, instances) -> "FeatureStats":
        instances = np.asarray(instances, dtype=np.float64)
        if instances.ndim != 2 or len(instances) == 0:
            raise AttributionError(f"Expected reference instances of shape (n, M), got {instances.shape}")
        return cls(means=instances.mean(axis=0), stds=instances.std(axis=0))


def _fit(features, targets, weights, alpha):
    return Ridge(alpha=alpha, fit_intercept=True).fit(features, targets, sample_weight=weights)


def lime_explain(
    model_fn, x, stats: FeatureStats, config: LimeConfig = LimeConfig(), *, feature_names=None
) -> Attribution:
    """Local weighted ridge surrogate around ``x``.

    Perturbations are Gaussian around ``x`` with the reference standard deviations; features whose standard
    deviation is zero stay fixed and never enter the surrogate.
    """
    x, _ = check_instance(x)
    num_features = x.size
    names = default_names(num_features, feature_names)
    if stats.stds.shape != x.shape:
        raise AttributionError(f"Feature statistics cover {stats.stds.shape[0]} features, instance has {num_features}")

    active = np.flatnonzero(stats.stds > 0)
    if active.size == 0:
        raise AttributionError("Every feature has zero spread in the reference data; nothing to perturb")

    rng = generator(config.seed, "lime")
    standardized = rng.standard_normal((config.n_perturb, active.size))
    samples = np.tile(x, (config.n_perturb, 1))
    samples[:, active] = x[active] + standardized * stats.stds[active]

    kernel_width = config.resolved_kernel_width(num_features)
    weights = np.exp(-np.sum(np.square(standardized), axis=1) / kernel_width**2)
    if np.sum(weights) < MIN_TOTAL_WEIGHT:
        raise AttributionError(f"All proximity weights vanish with kernel width {kernel_width}")

    outputs = evaluate_model(model_fn, samples)
    (prediction,) = evaluate_model(model_fn, x[None, :])
    features = samples[:, active]

    full = _fit(features, outputs, weights, config.ridge_alpha)
    top_k = min(config.top_k, active.size)
    selected = np.sort(np.argsort(-np.abs(full.coef_), kind="stable")[:top_k])
    surrogate = _fit(features[:, selected], outputs, weights, config.ridge_alpha)

    residuals = surrogate.predict(features[:, selected]) - outputs
    residual = float(np.sqrt(np.sum(weights * np.square(residuals)) / np.sum(weights)))
    logger.debug(f"lime: kept {top_k} of {active.size} perturbed features, weighted residual {residual:.3g}")

    scores = {names[active[index]]: float(coefficient) for index, coefficient in zip(selected, surrogate.coef_)}
    return Attribution(
        method="lime",
        feature_scores=scores,
        base_value=float(surrogate.intercept_),
        prediction=float(prediction),
        n_samples=config.n_perturb,
        residual=residual,
    )


__all__ = ["FeatureStats", "LimeConfig", "lime_explain"]
