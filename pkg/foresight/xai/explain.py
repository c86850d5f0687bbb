"""Attributions for trained forecasters over flattened, lag-named windows."""
from __future__ import annotations

import numpy as np
from loguru import logger

from foresight import models
from foresight.pipeline import WindowedDataset
from foresight.trainer import TrainedModel
from foresight.xai.core import AttributionError, flatten_window, global_shap_summary, unflatten_window
from foresight.xai.lime import FeatureStats, LimeConfig, lime_explain
from foresight.xai.shapley import MAX_EXACT_FEATURES, exact_shapley, kernel_shap


def model_function(params):
    """Batched ``(n, L * C) -> (n,)`` normalized forecast, the function every explainer queries."""

    def model_fn(flat_inputs):
        return models.predict(params, unflatten_window(flat_inputs, params.seq_len, params.n_features))

    return model_fn


def final_instance_index(dataset: WindowedDataset) -> int:
    if len(dataset) == 0:
        raise AttributionError("Cannot explain an empty dataset")
    return int(np.argmax(dataset.target_dates.to_numpy()))


def explain_instance(
    model: TrainedModel,
    dataset: WindowedDataset,
    index: int,
    method: str,
    *,
    reference: WindowedDataset,
    seed: int = 0,
    n_samples=None,
    lime_config: LimeConfig = None,
):
    window, names = flatten_window(dataset.inputs[index], list(dataset.feature_names))
    reference_instances = flatten_window(reference.inputs)
    model_fn = model_function(model.params)

    if method == "kernel_shap":
        attribution = kernel_shap(
            model_fn, window, reference_instances.mean(axis=0), n_samples, seed, feature_names=names
        )
    elif method == "exact_shapley":
        if window.size > MAX_EXACT_FEATURES:
            raise AttributionError(
                f"exact_shapley is limited to {MAX_EXACT_FEATURES} features, window has {window.size}"
            )
        attribution = exact_shapley(model_fn, window, reference_instances.mean(axis=0), feature_names=names)
    elif method == "lime":
        config = LimeConfig(seed=seed) if lime_config is None else lime_config
        attribution = lime_explain(
            model_fn, window, FeatureStats.from_instances(reference_instances), config, feature_names=names
        )
    else:
        raise AttributionError(f"Unknown attribution method '{method}'")

    return attribution.set(target_date=dataset.target_dates[index].strftime("%Y-%m-%d"))


def explain_final_instance(model: TrainedModel, dataset: WindowedDataset, method: str, *, reference, **kwargs):
    """Explains the chronologically last sample of ``dataset`` against statistics of the ``reference`` windows.

    SHAP methods use the mean reference window as background; LIME perturbs with the reference standard deviations.
    """
    index = final_instance_index(dataset)
    logger.info(f"Explaining {model.kind.value} forecast for {dataset.target_dates[index].date()} with {method}")
    return explain_instance(model, dataset, index, method, reference=reference, **kwargs)


def explain_global(model: TrainedModel, dataset: WindowedDataset, *, reference, seed=0, n_samples=None, limit=None):
    """KernelSHAP over every sample of ``dataset`` (or its last ``limit`` samples) reduced to mean absolute scores."""
    if len(dataset) == 0:
        raise AttributionError("Cannot explain an empty dataset")
    order = np.argsort(dataset.target_dates.to_numpy(), kind="stable")
    if limit is not None:
        order = order[-limit:]

    logger.info(f"Global KernelSHAP for {model.kind.value} over {len(order)} samples")
    attributions = [
        explain_instance(model, dataset, int(index), "kernel_shap", reference=reference, seed=seed, n_samples=n_samples)
        for index in order
    ]
    return global_shap_summary(attributions)


__all__ = ["explain_final_instance", "explain_global", "explain_instance", "final_instance_index", "model_function"]
