import pytest

import numpy as np

from foresight.models import ModelKind, forward, init_params

SMALL = {"filters": 4, "hidden_size": 4, "skip_hidden_size": 3}


def lstnet(seq_len, n_features, seed=0, target_index=0, **hyper):
    return init_params(
        ModelKind.LSTNET, seq_len, n_features, seed, hyper={**SMALL, **hyper}, target_index=target_index
    )


def zeroed(params, **overrides):
    parameters = {name: np.zeros_like(array) for name, array in params.parameters.items()}
    parameters.update(overrides)
    return params.with_parameters(parameters)


def test_lstnet_zero_weights_forecast_bias_terms():
    params = zeroed(lstnet(10, 3), **{"dense.bias": np.array([0.3]), "ar.bias": np.array([-0.1])})
    windows = np.random.default_rng(0).uniform(size=(5, 10, 3))
    np.testing.assert_allclose(forward(params, windows).numpy(), np.full(5, 0.2), atol=1e-15)


def test_lstnet_autoregressive_persistence():
    params = lstnet(10, 3, target_index=1)
    ar_weight = np.zeros((params.hyper["ar_window"], 1))
    ar_weight[-1, 0] = 1.0
    params = zeroed(params, **{"ar.weight": ar_weight, "ar.bias": np.array([0.25])})

    windows = np.random.default_rng(1).uniform(size=(4, 10, 3))
    expected = windows[:, -1, 1] + 0.25
    np.testing.assert_allclose(forward(params, windows).numpy(), expected, atol=1e-15)


def test_lstnet_autoregressive_window_is_clamped():
    params = lstnet(3, 2, kernel_width=1)
    assert params.hyper["ar_window"] == 3
    assert params.parameters["ar.weight"].shape == (3, 1)


def test_lstnet_parameter_shapes():
    params = lstnet(10, 3, skip=2)
    filters, hidden, skip_hidden = 4, 4, 3
    assert params.parameters["conv.weight"].shape == (3 * 3, filters)
    assert params.parameters["gru.input.weight"].shape == (filters, 3 * hidden)
    assert params.parameters["gru.hidden.weight"].shape == (hidden, 3 * hidden)
    assert params.parameters["skip_gru.hidden.weight"].shape == (skip_hidden, 3 * skip_hidden)
    assert params.parameters["dense.weight"].shape == (hidden + 2 * skip_hidden, 1)


@pytest.mark.parametrize(
    "seq_len, hyper",
    [
        (5, {"skip": 5}),
        (5, {"skip": 6}),
        (5, {"kernel_width": 6}),
        (5, {"kernel_width": 5, "skip": 2}),
    ],
)
def test_lstnet_rejects_invalid_structure(seq_len, hyper):
    with pytest.raises(ValueError):
        lstnet(seq_len, 2, **hyper)


def test_lstnet_rejects_target_outside_features():
    with pytest.raises(ValueError):
        lstnet(10, 2, target_index=2)


def test_lstnet_skip_path_sees_the_sequence():
    params = lstnet(10, 2, seed=3)
    parameters = dict(params.parameters)
    parameters["skip_gru.input.weight"] = parameters["skip_gru.input.weight"] * 0.0
    without_skip = params.with_parameters(parameters)

    windows = np.random.default_rng(2).uniform(size=(3, 10, 2))
    assert not np.allclose(forward(params, windows).numpy(), forward(without_skip, windows).numpy())


def test_lstnet_eval_is_deterministic():
    params = lstnet(10, 3, seed=4)
    windows = np.random.default_rng(5).uniform(size=(6, 10, 3))
    np.testing.assert_array_equal(forward(params, windows).numpy(), forward(params, windows).numpy())
