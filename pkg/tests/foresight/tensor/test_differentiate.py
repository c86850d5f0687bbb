import threading

import pytest

import graphviz
import numpy as np

import foresight.tensor as ft
from foresight.tensor.differentiate import build_graph


def test_gradient_accumulates_over_multiple_consumers():
    tensor = ft.parameter(np.array([1.0, 2.0, 3.0]), name="x")
    output = ft.sum(tensor * tensor + tensor * 3.0 + tensor)
    gradients = ft.backward(output)

    assert np.allclose(gradients[tensor], 2 * tensor.numpy() + 4.0)
    assert np.allclose(tensor.grad, 2 * tensor.numpy() + 4.0)


def test_backward_rejects_non_scalar_loss():
    tensor = ft.parameter(np.ones((2, 2)))
    with pytest.raises(ft.ShapeError):
        ft.backward(tensor * 2.0)


def test_backward_fills_zero_gradient_for_unused_inputs():
    used = ft.parameter(np.ones(3))
    unused = ft.parameter(np.ones((2, 2)))
    gradients = ft.backward(ft.sum(used), inputs=[used, unused])

    assert np.array_equal(gradients[used], np.ones(3))
    assert np.array_equal(gradients[unused], np.zeros((2, 2)))


def test_constants_do_not_receive_gradients():
    weight = ft.parameter(np.ones((3, 2)))
    data = ft.constant(np.ones((4, 3)))
    ft.backward(ft.sum(data @ weight))

    assert data.grad is None
    assert np.array_equal(weight.grad, np.full((3, 2), 4.0))


def test_no_grad_disables_recording():
    tensor = ft.parameter(np.ones(3))
    with ft.no_grad():
        output = tensor * 2.0
    assert not output.requires_grad
    assert output.is_leaf

    output = tensor * 2.0
    assert output.requires_grad
    assert not output.is_leaf


def test_no_grad_restores_state_after_exception():
    with pytest.raises(RuntimeError):
        with ft.no_grad():
            raise RuntimeError("boom")
    assert (ft.parameter(np.ones(2)) * 2.0).requires_grad


def test_no_grad_in_overlapping_threads_leaves_recording_on():
    first_entered = threading.Event()
    second_entered = threading.Event()
    first_left = threading.Event()
    recorded = {}

    def first():
        with ft.no_grad():
            first_entered.set()
            second_entered.wait(timeout=5)
        first_left.set()

    def second():
        first_entered.wait(timeout=5)
        with ft.no_grad():
            second_entered.set()
            first_left.wait(timeout=5)
            recorded["inside"] = (ft.parameter(np.ones(2)) * 2.0).requires_grad
        recorded["after"] = (ft.parameter(np.ones(2)) * 2.0).requires_grad

    threads = [threading.Thread(target=first), threading.Thread(target=second)]
    for thread in threads:
        thread.start()
    for thread in threads:
        thread.join()

    assert recorded == {"inside": False, "after": True}
    assert (ft.parameter(np.ones(2)) * 2.0).requires_grad


def test_graph_is_acyclic_and_ends_at_output():
    tensor = ft.parameter(np.ones((2, 3)))
    output = ft.sum(ft.relu(tensor @ ft.parameter(np.ones((3, 3)))))
    graph = build_graph(output)

    assert output in graph
    assert graph.out_degree(output) == 0
    assert len(graph) == 5


def test_visualize():
    tensor = ft.parameter(np.ones((2, 3)), name="input")
    output = ft.mean(ft.tanh(tensor))
    dot = ft.visualize(output)

    assert isinstance(dot, graphviz.Digraph)
    assert "input" in dot.source
    assert "tanh" in dot.source
