import pytest

import numpy as np

import foresight.tensor as ft
from foresight.models import ModelKind, as_tensors, default_hyper, forward, init_params, predict

TOY_HYPER = {
    ModelKind.DLINEAR: {},
    ModelKind.LSTNET: {"filters": 3, "hidden_size": 3, "skip_hidden_size": 2, "kernel_width": 2},
    ModelKind.VANILLA_TRANSFORMER: {"d_model": 8, "num_heads": 2, "num_layers": 2, "ff_size": 8},
    ModelKind.TST: {"d_model": 8, "num_heads": 2, "num_layers": 2, "ff_size": 8},
}


@pytest.mark.parametrize(
    "name, kind",
    [
        ("DLinear", ModelKind.DLINEAR),
        ("lstnet", ModelKind.LSTNET),
        ("vanilla", ModelKind.VANILLA_TRANSFORMER),
        ("Vanilla_Transformer", ModelKind.VANILLA_TRANSFORMER),
        ("tst", ModelKind.TST),
    ],
)
def test_model_kind_parse(name, kind):
    assert ModelKind.parse(name) is kind


def test_model_kind_parse_rejects_unknown_names():
    with pytest.raises(ValueError, match="Unknown model kind"):
        ModelKind.parse("arima")


def test_default_hyper_rejects_unknown_overrides():
    with pytest.raises(ValueError):
        default_hyper(ModelKind.DLINEAR, {"d_model": 8})


@pytest.mark.parametrize("kind", list(ModelKind))
def test_init_params_is_deterministic(kind):
    first = init_params(kind, 10, 3, seed=7)
    second = init_params(kind, 10, 3, seed=7)
    assert first.parameters.keys() == second.parameters.keys()
    for name, array in first.parameters.items():
        np.testing.assert_array_equal(array, second.parameters[name])

    other = init_params(kind, 10, 3, seed=8)
    assert any(not np.array_equal(array, other.parameters[name]) for name, array in first.parameters.items())


@pytest.mark.parametrize("kind", list(ModelKind))
def test_init_params_biases_are_zero_and_weights_bounded(kind):
    params = init_params(kind, 10, 3, seed=1)
    for name, array in params.parameters.items():
        if name.endswith(".bias"):
            np.testing.assert_array_equal(array, 0.0)
        elif name.endswith("norm.weight"):
            np.testing.assert_array_equal(array, 1.0)
        else:
            fan_in, fan_out = (array.shape[-1], 1) if name.startswith(("trend", "seasonal")) else array.shape
            assert np.all(np.abs(array) <= np.sqrt(6.0 / (fan_in + fan_out)))


@pytest.mark.parametrize("kind", list(ModelKind))
@pytest.mark.parametrize("seq_len", [5, 10])
@pytest.mark.parametrize("n_features", [1, 3])
@pytest.mark.parametrize("seed", [0, 1, 2, 3, 4])
def test_forward_gradients_match_finite_differences(kind, seq_len, n_features, seed):
    params = init_params(kind, seq_len, n_features, seed=seed, hyper=TOY_HYPER[kind])
    windows = np.random.default_rng(seed).uniform(size=(2, seq_len, n_features))
    weights = np.array([0.6, -1.3])
    parameters = as_tensors(params, requires_grad=True)

    def loss(_):
        return ft.sum(forward(params, windows, parameters=parameters) * weights)

    for name, tensor in parameters.items():
        assert ft.grad_check(loss, tensor) < 1e-4, name


@pytest.mark.parametrize("kind", list(ModelKind))
def test_predict_matches_forward_across_batches(kind):
    params = init_params(kind, 5, 2, seed=2, hyper=TOY_HYPER[kind])
    windows = np.random.default_rng(1).uniform(size=(7, 5, 2))
    np.testing.assert_allclose(predict(params, windows, batch_size=3), forward(params, windows).numpy(), atol=1e-12)
    assert predict(params, np.zeros((0, 5, 2))).shape == (0,)


def test_predict_does_not_record_a_graph():
    params = init_params(ModelKind.DLINEAR, 5, 2, seed=0)
    parameters = as_tensors(params, requires_grad=True)
    with ft.no_grad():
        output = forward(params, np.ones((1, 5, 2)), parameters=parameters)
    assert output.is_leaf and not output.requires_grad
