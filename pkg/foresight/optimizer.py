import numpy as np
from pyrsistent import PClass, field, pmap, pmap_field


class NonFiniteGradientError(FloatingPointError):
    def __init__(self, name):
        super().__init__(f"Gradient of parameter '{name}' contains NaN or infinity")
        self.name = name


class AdamState(PClass):
    """Step count and bias-uncorrected moment estimates, keyed by parameter name."""

    step = field(type=int, initial=0, invariant=lambda step: (step >= 0, "step must not be negative"))
    first_moments = pmap_field(str, np.ndarray)
    second_moments = pmap_field(str, np.ndarray)


def adam_step(parameters, gradients, state: AdamState, learning_rate, *, beta_1=0.9, beta_2=0.999, epsilon=1e-8):
    """One bias-corrected Adam update of every parameter; returns ``(updated parameters, new state)``.

    A parameter without moments in ``state`` starts from zero moments.
    """
    for name, gradient in gradients.items():
        if not np.all(np.isfinite(gradient)):
            raise NonFiniteGradientError(name)

    step = state.step + 1
    updated_parameters = {}
    first_moments = {}
    second_moments = {}
    for name, parameter in parameters.items():
        gradient = np.asarray(gradients[name], dtype=np.float64)
        first_moment = beta_1 * state.first_moments.get(name, 0.0) + (1.0 - beta_1) * gradient
        second_moment = beta_2 * state.second_moments.get(name, 0.0) + (1.0 - beta_2) * gradient * gradient

        corrected_first_moment = first_moment / (1.0 - beta_1**step)
        corrected_second_moment = second_moment / (1.0 - beta_2**step)
        updated_parameters[name] = parameter - learning_rate * corrected_first_moment / (
            np.sqrt(corrected_second_moment) + epsilon
        )
        first_moments[name] = np.asarray(first_moment, dtype=np.float64)
        second_moments[name] = np.asarray(second_moment, dtype=np.float64)

    new_state = AdamState(step=step, first_moments=pmap(first_moments), second_moments=pmap(second_moments))
    return updated_parameters, new_state


__all__ = ["AdamState", "NonFiniteGradientError", "adam_step"]
