import pytest

import numpy as np
from pyrsistent import InvariantException

from foresight.xai import AttributionError, FeatureStats, LimeConfig, lime_explain


def stats(num_features, std=1.0):
    return FeatureStats(means=np.zeros(num_features), stds=np.full(num_features, std))


def test_lime_constant_model():
    attribution = lime_explain(lambda z: np.full(len(z), 5.0), np.ones(4), stats(4), LimeConfig(top_k=4))
    np.testing.assert_allclose(list(attribution.feature_scores.values()), 0.0, atol=1e-6)
    assert attribution.base_value == pytest.approx(5.0, abs=1e-6)
    assert attribution.prediction == 5.0


def test_lime_recovers_linear_coefficients():
    weights = np.array([1.5, -2.0, 0.7, 3.1, -0.4])
    x = np.array([0.2, -0.1, 0.5, 1.0, -0.3])

    attribution = lime_explain(lambda z: z @ weights, x, stats(5), LimeConfig(top_k=5, seed=1))
    recovered = np.array([attribution.feature_scores[f"x{index}"] for index in range(5)])
    np.testing.assert_allclose(recovered, weights, rtol=0.05)


def test_lime_reports_exactly_top_k_features():
    weights = np.array([0.1, 5.0, -0.2, 3.0, 0.05, -4.0, 0.3])
    attribution = lime_explain(lambda z: z @ weights, np.zeros(7), stats(7), LimeConfig(top_k=3))
    assert sorted(attribution.feature_scores) == ["x1", "x3", "x5"]
    assert attribution.ranked()[0][0] == "x1"


def test_lime_holds_zero_spread_features_fixed():
    reference = FeatureStats(means=np.zeros(3), stds=np.array([1.0, 0.0, 2.0]))
    attribution = lime_explain(lambda z: z[:, 0] + 10 * z[:, 1] - z[:, 2], np.ones(3), reference)
    assert "x1" not in attribution.feature_scores
    assert attribution.feature_scores["x0"] == pytest.approx(1.0, rel=0.05)


def test_lime_is_deterministic_per_seed():
    weights = np.array([1.0, -1.0, 2.0])

    def model_fn(z):
        return np.tanh(z @ weights)

    first = lime_explain(model_fn, np.zeros(3), stats(3), LimeConfig(seed=4))
    second = lime_explain(model_fn, np.zeros(3), stats(3), LimeConfig(seed=4))
    other = lime_explain(model_fn, np.zeros(3), stats(3), LimeConfig(seed=5))
    assert first == second
    assert first != other


def test_lime_rejects_vanishing_kernel():
    with pytest.raises(AttributionError, match="weights vanish"):
        lime_explain(lambda z: z.sum(axis=1), np.zeros(50), stats(50), LimeConfig(kernel_width=1e-3))


def test_lime_rejects_reference_without_spread():
    with pytest.raises(AttributionError):
        lime_explain(lambda z: z.sum(axis=1), np.zeros(2), stats(2, std=0.0))


def test_feature_stats_from_instances():
    reference = FeatureStats.from_instances(np.array([[1.0, 4.0], [3.0, 4.0]]))
    np.testing.assert_array_equal(reference.means, [2.0, 4.0])
    np.testing.assert_array_equal(reference.stds, [1.0, 0.0])


def test_lime_config_validation():
    assert LimeConfig().resolved_kernel_width(16) == 3.0
    assert LimeConfig(kernel_width=2).resolved_kernel_width(16) == 2.0
    with pytest.raises(InvariantException):
        LimeConfig(top_k=0)
