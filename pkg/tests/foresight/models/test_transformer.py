import pytest

import numpy as np

import foresight.tensor as ft
from foresight.models import EVAL, ModelKind, encode, forward, init_params, sinusoidal_encoding
from foresight.tensor import layers

TRANSFORMERS = [ModelKind.VANILLA_TRANSFORMER, ModelKind.TST]
SMALL = {"d_model": 8, "num_heads": 2, "num_layers": 2, "ff_size": 16}


def transformer(kind, seq_len=6, n_features=3, seed=0, **hyper):
    return init_params(kind, seq_len, n_features, seed, hyper={**SMALL, **hyper})


def test_sinusoidal_encoding_position_zero():
    encoding = sinusoidal_encoding(4, 6)
    np.testing.assert_array_equal(encoding[0, 0::2], np.zeros(3))
    np.testing.assert_array_equal(encoding[0, 1::2], np.ones(3))


def test_sinusoidal_encoding_hand_value():
    assert sinusoidal_encoding(2, 4)[1, 0] == pytest.approx(0.841471, abs=1e-6)
    assert sinusoidal_encoding(2, 4)[1, 3] == pytest.approx(np.cos(1 / 100), abs=1e-12)


def test_sinusoidal_encoding_range():
    encoding = sinusoidal_encoding(300, 32)
    assert encoding.shape == (300, 32)
    assert np.all(np.abs(encoding) <= 1.0)


def test_sinusoidal_encoding_rejects_odd_width():
    with pytest.raises(ValueError):
        sinusoidal_encoding(4, 5)


def test_attention_with_equal_keys_is_uniform():
    rng = np.random.default_rng(0)
    query = ft.constant(rng.normal(size=(1, 5, 4)))
    key = ft.constant(np.tile(rng.normal(size=(1, 1, 4)), (1, 5, 1)))
    value = ft.constant(rng.normal(size=(1, 5, 4)))

    output, probabilities = layers.scaled_dot_product_attention(query, key, value)
    np.testing.assert_allclose(probabilities.numpy(), np.full((1, 5, 5), 0.2), atol=1e-12)
    np.testing.assert_allclose(output.numpy(), np.broadcast_to(value.numpy().mean(axis=1, keepdims=True), (1, 5, 4)))

    # under a causal mask the weights are uniform over the visible prefix
    _, probabilities = layers.scaled_dot_product_attention(query, key, value, layers.causal_mask(5))
    for row in range(5):
        np.testing.assert_allclose(probabilities.numpy()[0, row, : row + 1], 1.0 / (row + 1), atol=1e-12)
        np.testing.assert_array_equal(probabilities.numpy()[0, row, row + 1 :], 0.0)


def test_attention_rows_sum_to_one():
    rng = np.random.default_rng(1)
    query, key, value = (ft.constant(rng.normal(size=(2, 3, 7, 4))) for _ in range(3))
    for mask in (None, layers.causal_mask(7)):
        _, probabilities = layers.scaled_dot_product_attention(query, key, value, mask)
        np.testing.assert_allclose(probabilities.numpy().sum(axis=-1), 1.0, atol=1e-9)


def test_causal_attention_ignores_future_positions():
    rng = np.random.default_rng(2)
    query, key, value = (rng.normal(size=(1, 6, 4)) for _ in range(3))
    mask = layers.causal_mask(6)
    original, _ = layers.scaled_dot_product_attention(ft.constant(query), ft.constant(key), ft.constant(value), mask)

    key[:, 4], value[:, 4] = 10.0, -10.0
    perturbed, _ = layers.scaled_dot_product_attention(ft.constant(query), ft.constant(key), ft.constant(value), mask)
    np.testing.assert_allclose(perturbed.numpy()[:, :4], original.numpy()[:, :4], atol=1e-12)
    assert not np.allclose(perturbed.numpy()[:, 4:], original.numpy()[:, 4:])


@pytest.mark.parametrize("kind", TRANSFORMERS)
@pytest.mark.parametrize("hyper", [{"d_model": 10, "num_heads": 4}, {"d_model": 9, "num_heads": 3}, {"num_layers": 0}])
def test_transformer_rejects_invalid_structure(kind, hyper):
    with pytest.raises(ValueError):
        transformer(kind, **hyper)


@pytest.mark.parametrize("kind", TRANSFORMERS)
def test_zero_readout_forecasts_bias(kind):
    params = transformer(kind)
    parameters = dict(params.parameters)
    parameters["readout.weight"] = np.zeros_like(parameters["readout.weight"])
    parameters["readout.bias"] = np.array([0.7])
    params = params.with_parameters(parameters)

    windows = np.random.default_rng(0).uniform(size=(4, 6, 3))
    np.testing.assert_array_equal(forward(params, windows).numpy(), np.full(4, 0.7))


@pytest.mark.parametrize("kind", TRANSFORMERS)
def test_eval_forward_is_deterministic(kind):
    params = transformer(kind, seed=3)
    windows = np.random.default_rng(1).uniform(size=(5, 6, 3))
    np.testing.assert_array_equal(forward(params, windows).numpy(), forward(params, windows).numpy())


@pytest.mark.parametrize("kind", TRANSFORMERS)
def test_forward_is_finite_on_unit_inputs(kind):
    params = init_params(kind, 30, 25, seed=11)
    windows = np.random.default_rng(4).uniform(size=(8, 30, 25))
    assert np.all(np.isfinite(forward(params, windows).numpy()))


@pytest.mark.parametrize("kind", TRANSFORMERS)
def test_training_dropout_is_reproducible(kind):
    params = transformer(kind)
    windows = np.random.default_rng(2).uniform(size=(4, 6, 3))
    context = EVAL.set(train=True, dropout=0.3, seed=9, step=2)

    first = forward(params, windows, context).numpy()
    np.testing.assert_array_equal(first, forward(params, windows, context).numpy())
    assert not np.array_equal(first, forward(params, windows, context.set(step=3)).numpy())
    assert not np.array_equal(first, forward(params, windows).numpy())


def test_tst_hidden_states_are_causal():
    params = transformer(ModelKind.TST, seq_len=8, seed=5)
    windows = np.random.default_rng(6).uniform(size=(2, 8, 3))
    perturbed = windows.copy()
    perturbed[:, 5, :] += 3.0

    for before, after in zip(encode(params, windows), encode(params, perturbed)):
        np.testing.assert_allclose(after[:, :5], before[:, :5], atol=1e-12)
        assert not np.allclose(after[:, 5:], before[:, 5:])
    assert forward(params, windows).numpy()[0] != forward(params, perturbed).numpy()[0]


def test_vanilla_hidden_states_see_the_whole_window():
    params = transformer(ModelKind.VANILLA_TRANSFORMER, seq_len=8, seed=5)
    windows = np.random.default_rng(6).uniform(size=(2, 8, 3))
    perturbed = windows.copy()
    perturbed[:, 5, :] += 3.0

    before, after = encode(params, windows)[-1], encode(params, perturbed)[-1]
    assert not np.allclose(after[:, :5], before[:, :5])


def test_encode_returns_one_state_per_block():
    params = transformer(ModelKind.TST, num_layers=3)
    states = encode(params, np.zeros((2, 6, 3)))
    assert [state.shape for state in states] == [(2, 6, 8)] * 3


def test_encode_requires_an_encoder_stack():
    params = init_params(ModelKind.DLINEAR, 6, 3, seed=0)
    with pytest.raises(ValueError):
        encode(params, np.zeros((1, 6, 3)))


def test_tst_and_vanilla_have_distinct_embeddings():
    vanilla = transformer(ModelKind.VANILLA_TRANSFORMER)
    tst = transformer(ModelKind.TST)
    assert "input_projection.bias" in vanilla.parameters
    assert "input_projection.bias" not in tst.parameters
    assert "embedding_norm.weight" in tst.parameters
