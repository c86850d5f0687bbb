import pytest

import numpy as np
from pyrsistent import InvariantException

from foresight.xai import (
    Attribution,
    AttributionError,
    FeatureName,
    feature_names,
    flatten_window,
    global_shap_summary,
    unflatten_window,
)


def shap_attribution(scores, base_value=0.0):
    return Attribution(
        method="kernel_shap", feature_scores=scores, base_value=base_value, prediction=base_value + sum(scores.values())
    )


def test_feature_names_are_column_major_with_descending_lags():
    assert feature_names(["close", "RSI_14"], 2) == ["close_t2", "close_t1", "RSI_14_t2", "RSI_14_t1"]
    assert str(FeatureName(column="volume", lag=1)) == "volume_t1"


def test_flatten_window_aligns_values_with_names():
    window = np.array([[10.0, 40.0], [11.0, 45.0]])
    flat, names = flatten_window(window, ["close", "RSI_14"])
    assert dict(zip(names, flat)) == {"close_t2": 10.0, "close_t1": 11.0, "RSI_14_t2": 40.0, "RSI_14_t1": 45.0}


def test_unflatten_inverts_flatten():
    window = np.arange(15.0).reshape(5, 3)
    np.testing.assert_array_equal(unflatten_window(flatten_window(window), 5, 3), window)


def test_flatten_batch_matches_single_windows():
    batch = np.random.default_rng(0).normal(size=(4, 3, 2))
    flat = flatten_window(batch)
    assert flat.shape == (4, 6)
    for index in range(4):
        np.testing.assert_array_equal(flat[index], flatten_window(batch[index]))
    np.testing.assert_array_equal(unflatten_window(flat, 3, 2), batch)


def test_flatten_rejects_bad_shapes():
    with pytest.raises(AttributionError):
        flatten_window(np.zeros(4))
    with pytest.raises(AttributionError):
        flatten_window(np.zeros((3, 2)), ["close"])
    with pytest.raises(AttributionError):
        unflatten_window(np.zeros(5), 2, 2)


def test_attribution_requires_additivity_for_shap_methods():
    with pytest.raises(InvariantException):
        Attribution(method="kernel_shap", feature_scores={"x0": 1.0}, base_value=0.0, prediction=2.0)
    lime = Attribution(method="lime", feature_scores={"x0": 1.0}, base_value=0.0, prediction=2.0)
    assert lime.prediction == 2.0


def test_ranked_orders_by_magnitude_then_name():
    attribution = shap_attribution({"b": 1.0, "a": -1.0, "c": 3.0})
    assert attribution.ranked() == [("c", 3.0), ("a", -1.0), ("b", 1.0)]


def test_global_summary_means_absolute_scores():
    summary = global_shap_summary(
        [shap_attribution({"f1": 1.0, "f2": -3.0}), shap_attribution({"f1": 1.0, "f2": 1.0})]
    )
    assert dict(summary.mean_abs) == {"f1": 1.0, "f2": 2.0}
    assert list(summary.ranking) == ["f2", "f1"]
    assert summary.n_instances == 2
    assert summary.top(1) == [("f2", 2.0)]


def test_global_summary_breaks_ties_lexicographically():
    summary = global_shap_summary([shap_attribution({"zeta": 0.0, "alpha": 0.0, "mid": 0.0})])
    assert list(summary.ranking) == ["alpha", "mid", "zeta"]


def test_global_summary_rejects_bad_input():
    with pytest.raises(AttributionError):
        global_shap_summary([])
    with pytest.raises(AttributionError):
        global_shap_summary([shap_attribution({"f1": 1.0}), shap_attribution({"f2": 1.0})])
