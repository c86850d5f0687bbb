from __future__ import annotations

import graphviz
import networkx
import numpy as np

from foresight.tensor import jacobians
from foresight.tensor.core import ShapeError, Tensor


def build_graph(output: Tensor) -> networkx.DiGraph:
    """Records every tensor on a path from a gradient-requiring leaf to ``output``.

    Edges run from operand to result, so the graph is acyclic and operands precede their uses.
    """
    graph = networkx.DiGraph()
    graph.add_node(output)
    stack = [output]
    while stack:
        tensor = stack.pop()
        for operand in tensor.operands:
            if not operand.requires_grad:
                continue
            if operand not in graph:
                graph.add_node(operand)
                stack.append(operand)
            graph.add_edge(operand, tensor)
    return graph


def topological_traversal(graph):
    return networkx.topological_sort(graph)


def backward(loss: Tensor, inputs=None) -> dict[Tensor, np.ndarray]:
    """Accumulates d(loss)/d(leaf) into ``leaf.grad`` for every gradient-requiring leaf.

    Returns a map from leaf to its gradient. When ``inputs`` is given, the map covers exactly those
    tensors, with zero gradients for any that do not feed the loss.
    """
    if loss.size != 1:
        raise ShapeError(f"backward expects a scalar loss, got shape {loss.shape}")

    gradients = {}
    if loss.requires_grad:
        graph = build_graph(loss)
        sorted_tensors = reversed(list(topological_traversal(graph)))

        node_to_incoming_gradient = {loss: np.ones_like(loss.data)}
        for tensor in sorted_tensors:
            incoming_gradient = node_to_incoming_gradient.pop(tensor, None)
            if incoming_gradient is None:
                continue

            if tensor.is_leaf:
                tensor.grad = incoming_gradient.copy() if tensor.grad is None else tensor.grad + incoming_gradient
                gradients[tensor] = tensor.grad
                continue

            create_outgoing_gradients = getattr(jacobians, f"{type(tensor.instruction).__name__}_jacobian")
            outgoing_gradients = create_outgoing_gradients(
                tensor.instruction,
                incoming_gradient,
                [operand.data for operand in tensor.operands],
                tensor.data,
            )

            for operand, outgoing_gradient in zip(tensor.operands, outgoing_gradients):
                if not operand.requires_grad or outgoing_gradient is None:
                    continue
                if operand in node_to_incoming_gradient:
                    outgoing_gradient = node_to_incoming_gradient[operand] + outgoing_gradient
                node_to_incoming_gradient[operand] = outgoing_gradient

    if inputs is None:
        return gradients

    result = {}
    for input_tensor in inputs:
        if input_tensor.grad is None:
            input_tensor.grad = np.zeros_like(input_tensor.data)
        result[input_tensor] = input_tensor.grad
    return result


def visualize(output: Tensor, *, graphviz_graph=None) -> graphviz.Digraph:
    if graphviz_graph is None:
        graphviz_graph = graphviz.Digraph()

    graph = build_graph(output)
    names = {tensor: f"node_{index}" for index, tensor in enumerate(topological_traversal(graph))}
    for tensor, name in names.items():
        label = tensor.name if tensor.is_leaf else type(tensor.instruction).__name__
        graphviz_graph.node(name, label=f"{label}:{tensor.shape}")
    for source, sink in graph.edges():
        graphviz_graph.edge(names[source], names[sink])
    return graphviz_graph


__all__ = ["backward", "build_graph", "topological_traversal", "visualize"]
