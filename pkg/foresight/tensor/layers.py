import math

import numpy as np

from foresight.tensor import functions as F
from foresight.tensor.core import ShapeError


def linear(input_tensor, weight, bias=None):
    output = input_tensor @ weight
    if bias is not None:
        output = output + bias
    return output


def layer_norm(input_tensor, weight, bias, *, axis=-1, epsilon=1e-5):
    output = F.layer_norm(input_tensor, axis=axis, epsilon=epsilon)
    output = output * weight
    output = output + bias
    return output


def causal_mask(sequence_size: int) -> np.ndarray:
    """True above the diagonal: position t may not attend to positions after t."""
    return np.triu(np.ones((sequence_size, sequence_size), dtype=bool), k=1)


def scaled_dot_product_attention(query, key, value, attention_mask=None):
    """softmax(Q Kᵀ / √d + mask) V over the last two axes.

    Returns the attended values and the attention probabilities. Masked positions get exactly zero
    weight.
    """
    head_size = query.shape[-1]
    axes = list(range(key.rank))
    axes[-2], axes[-1] = axes[-1], axes[-2]

    attention_scores = query @ F.transpose(key, axes)
    attention_scores = attention_scores / math.sqrt(head_size)
    if attention_mask is not None:
        attention_scores = F.masked_fill(attention_scores, attention_mask, -np.inf)

    attention_probs = F.softmax(attention_scores, axis=-1)
    return attention_probs @ value, attention_probs


def multi_head_attention(
    hidden_states,
    attention_mask,
    query_weight,
    query_bias,
    key_weight,
    value_weight,
    value_bias,
    output_weight,
    output_bias,
    *,
    num_heads,
):
    batch_size, sequence_size, hidden_size = hidden_states.shape
    if hidden_size % num_heads != 0:
        raise ShapeError(f"hidden_size must be divisible by num_heads: {hidden_size} % {num_heads} != 0")
    head_size = hidden_size // num_heads

    query = hidden_states @ query_weight
    query = query + query_bias
    query = F.reshape(query, (batch_size, sequence_size, num_heads, head_size))
    query = F.transpose(query, (0, 2, 1, 3))

    # No key bias: it adds the same logit to every key of a query row, which softmax cancels.
    key = hidden_states @ key_weight
    key = F.reshape(key, (batch_size, sequence_size, num_heads, head_size))
    key = F.transpose(key, (0, 2, 1, 3))

    value = hidden_states @ value_weight
    value = value + value_bias
    value = F.reshape(value, (batch_size, sequence_size, num_heads, head_size))
    value = F.transpose(value, (0, 2, 1, 3))

    context_layer, _ = scaled_dot_product_attention(query, key, value, attention_mask)

    context_layer = F.transpose(context_layer, (0, 2, 1, 3))
    context_layer = F.reshape(context_layer, (batch_size, sequence_size, hidden_size))

    self_output = context_layer @ output_weight
    self_output = self_output + output_bias
    return self_output


def feedforward(hidden_states, intermediate_weight, intermediate_bias, output_weight, output_bias, *, activation):
    hidden_states = hidden_states @ intermediate_weight
    hidden_states = hidden_states + intermediate_bias
    hidden_states = activation(hidden_states)
    hidden_states = hidden_states @ output_weight
    hidden_states = hidden_states + output_bias
    return hidden_states


def gru_cell(input_tensor, hidden_state, input_weight, hidden_weight, bias):
    """One gated recurrent step; gates are packed as [update | reset | candidate] along the last axis."""
    hidden_size = hidden_state.shape[-1]
    input_projection = input_tensor @ input_weight + bias
    hidden_projection = hidden_state @ hidden_weight

    def gate(projection, index):
        return projection[..., index * hidden_size : (index + 1) * hidden_size]

    update = F.sigmoid(gate(input_projection, 0) + gate(hidden_projection, 0))
    reset = F.sigmoid(gate(input_projection, 1) + gate(hidden_projection, 1))
    candidate = F.tanh(gate(input_projection, 2) + reset * gate(hidden_projection, 2))
    return (1.0 - update) * candidate + update * hidden_state


__all__ = [
    "causal_mask",
    "feedforward",
    "gru_cell",
    "layer_norm",
    "linear",
    "multi_head_attention",
    "scaled_dot_product_attention",
]
