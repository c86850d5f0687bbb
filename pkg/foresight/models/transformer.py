"""Encoder-only transformers reading out the final position.

The vanilla variant projects each window row with a biased linear layer, attends without a mask and
uses ReLU feed-forward blocks. The time-series variant embeds each step without a bias, normalizes
the embedding, attends causally and uses GELU feed-forward blocks.
"""
import numpy as np

import foresight.tensor as ft
from foresight.models.core import glorot_uniform, ones, zeros
from foresight.tensor import layers


def sinusoidal_encoding(seq_len, d_model) -> np.ndarray:
    if d_model % 2 != 0:
        raise ValueError(f"Sinusoidal encoding needs an even d_model, got {d_model}")
    positions = np.arange(seq_len, dtype=np.float64)[:, None]
    frequencies = np.power(10000.0, -np.arange(0, d_model, 2, dtype=np.float64) / d_model)
    encoding = np.zeros((seq_len, d_model))
    encoding[:, 0::2] = np.sin(positions * frequencies)
    encoding[:, 1::2] = np.cos(positions * frequencies)
    return encoding


def resolve_hyper(hyper, seq_len, n_features):
    if hyper["num_layers"] < 1:
        raise ValueError(f"num_layers must be at least 1, got {hyper['num_layers']}")
    if hyper["d_model"] % hyper["num_heads"] != 0:
        raise ValueError(f"d_model {hyper['d_model']} is not divisible by num_heads {hyper['num_heads']}")
    if hyper["d_model"] % 2 != 0:
        raise ValueError(f"d_model must be even, got {hyper['d_model']}")
    return dict(hyper)


def _encoder_specs(encoder_index, d_model, ff_size):
    prefix = f"encoder.{encoder_index}"
    square = ((d_model, d_model), glorot_uniform(d_model, d_model))
    vector = ((d_model,), zeros)
    return {
        f"{prefix}.attention.query.weight": square,
        f"{prefix}.attention.query.bias": vector,
        f"{prefix}.attention.key.weight": square,
        f"{prefix}.attention.value.weight": square,
        f"{prefix}.attention.value.bias": vector,
        f"{prefix}.attention.output.weight": square,
        f"{prefix}.attention.output.bias": vector,
        f"{prefix}.attention.norm.weight": ((d_model,), ones),
        f"{prefix}.attention.norm.bias": vector,
        f"{prefix}.feedforward.intermediate.weight": ((d_model, ff_size), glorot_uniform(d_model, ff_size)),
        f"{prefix}.feedforward.intermediate.bias": ((ff_size,), zeros),
        f"{prefix}.feedforward.output.weight": ((ff_size, d_model), glorot_uniform(ff_size, d_model)),
        f"{prefix}.feedforward.output.bias": vector,
        f"{prefix}.feedforward.norm.weight": ((d_model,), ones),
        f"{prefix}.feedforward.norm.bias": vector,
    }


def _encoder_stack_specs(hyper):
    specs = {}
    for encoder_index in range(hyper["num_layers"]):
        specs.update(_encoder_specs(encoder_index, hyper["d_model"], hyper["ff_size"]))
    d_model = hyper["d_model"]
    specs["readout.weight"] = ((d_model, 1), glorot_uniform(d_model, 1))
    specs["readout.bias"] = ((1,), zeros)
    return specs


def vanilla_parameter_specs(seq_len, n_features, hyper):
    d_model = hyper["d_model"]
    return {
        "input_projection.weight": ((n_features, d_model), glorot_uniform(n_features, d_model)),
        "input_projection.bias": ((d_model,), zeros),
        **_encoder_stack_specs(hyper),
    }


def tst_parameter_specs(seq_len, n_features, hyper):
    d_model = hyper["d_model"]
    return {
        "value_embedding.weight": ((n_features, d_model), glorot_uniform(n_features, d_model)),
        "embedding_norm.weight": ((d_model,), ones),
        "embedding_norm.bias": ((d_model,), zeros),
        **_encoder_stack_specs(hyper),
    }


def encoder(hidden_states, attention_mask, parameters, context, *, encoder_index, num_heads, activation):
    prefix = f"encoder.{encoder_index}"

    attention_output = layers.multi_head_attention(
        hidden_states,
        attention_mask,
        parameters[f"{prefix}.attention.query.weight"],
        parameters[f"{prefix}.attention.query.bias"],
        parameters[f"{prefix}.attention.key.weight"],
        parameters[f"{prefix}.attention.value.weight"],
        parameters[f"{prefix}.attention.value.bias"],
        parameters[f"{prefix}.attention.output.weight"],
        parameters[f"{prefix}.attention.output.bias"],
        num_heads=num_heads,
    )
    attention_output = ft.dropout(
        attention_output, context.dropout, context.dropout_seed(f"{prefix}.attention"), context.train
    )
    hidden_states = layers.layer_norm(
        hidden_states + attention_output,
        parameters[f"{prefix}.attention.norm.weight"],
        parameters[f"{prefix}.attention.norm.bias"],
    )

    feedforward_output = layers.feedforward(
        hidden_states,
        parameters[f"{prefix}.feedforward.intermediate.weight"],
        parameters[f"{prefix}.feedforward.intermediate.bias"],
        parameters[f"{prefix}.feedforward.output.weight"],
        parameters[f"{prefix}.feedforward.output.bias"],
        activation=activation,
    )
    feedforward_output = ft.dropout(
        feedforward_output, context.dropout, context.dropout_seed(f"{prefix}.feedforward"), context.train
    )
    return layers.layer_norm(
        hidden_states + feedforward_output,
        parameters[f"{prefix}.feedforward.norm.weight"],
        parameters[f"{prefix}.feedforward.norm.bias"],
    )


def encode(hidden_states, attention_mask, parameters, hyper, context, *, activation):
    """Runs the encoder stack and returns the hidden states after every block."""
    outputs = []
    for encoder_index in range(hyper["num_layers"]):
        hidden_states = encoder(
            hidden_states,
            attention_mask,
            parameters,
            context,
            encoder_index=encoder_index,
            num_heads=hyper["num_heads"],
            activation=activation,
        )
        outputs.append(hidden_states)
    return outputs


def _readout(hidden_states, parameters):
    batch_size = hidden_states.shape[0]
    last_position = hidden_states[:, hidden_states.shape[1] - 1, :]
    output = last_position @ parameters["readout.weight"] + parameters["readout.bias"]
    return ft.reshape(output, (batch_size,))


def vanilla_embed(parameters, windows, hyper, context):
    _, seq_len, _ = windows.shape
    embeddings = windows @ parameters["input_projection.weight"] + parameters["input_projection.bias"]
    embeddings = embeddings + sinusoidal_encoding(seq_len, hyper["d_model"])
    return ft.dropout(embeddings, context.dropout, context.dropout_seed("embedding"), context.train)


def tst_embed(parameters, windows, hyper, context):
    _, seq_len, _ = windows.shape
    embeddings = windows @ parameters["value_embedding.weight"]
    embeddings = embeddings + sinusoidal_encoding(seq_len, hyper["d_model"])
    embeddings = layers.layer_norm(
        embeddings, parameters["embedding_norm.weight"], parameters["embedding_norm.bias"]
    )
    return ft.dropout(embeddings, context.dropout, context.dropout_seed("embedding"), context.train)


def vanilla_encode(parameters, windows, hyper, context):
    embeddings = vanilla_embed(parameters, windows, hyper, context)
    return encode(embeddings, None, parameters, hyper, context, activation=ft.relu)


def tst_encode(parameters, windows, hyper, context):
    embeddings = tst_embed(parameters, windows, hyper, context)
    mask = layers.causal_mask(windows.shape[1])
    return encode(embeddings, mask, parameters, hyper, context, activation=ft.gelu)


def vanilla_forward(parameters, windows, hyper, context):
    return _readout(vanilla_encode(parameters, windows, hyper, context)[-1], parameters)


def tst_forward(parameters, windows, hyper, context):
    return _readout(tst_encode(parameters, windows, hyper, context)[-1], parameters)


__all__ = [
    "encode",
    "sinusoidal_encoding",
    "tst_encode",
    "tst_forward",
    "tst_parameter_specs",
    "vanilla_encode",
    "vanilla_forward",
    "vanilla_parameter_specs",
]
