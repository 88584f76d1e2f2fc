"""
Adam with bias correction:

    m = b1 * m + (1 - b1) * g
    v = b2 * v + (1 - b2) * g^2
    p -= lr * (m / (1 - b1^t)) / (sqrt(v / (1 - b2^t)) + eps)
"""
from dataclasses import dataclass, field

import numpy as np

from training.training_exceptions import NonFiniteGradientError


@dataclass
class AdamState(object):
    step: int = 0
    first_moment: dict = field(default_factory=dict)
    second_moment: dict = field(default_factory=dict)

    @classmethod
    def zeros(cls, params: dict):
        return cls(step=0, first_moment={name: np.zeros_like(value) for name, value in params.items()},
                   second_moment={name: np.zeros_like(value) for name, value in params.items()})


def adam_step(params: dict, grads: dict, state: AdamState, config) -> AdamState:
    """
    Updates params in place

    :param config: anything with learning_rate, beta1, beta2, epsilon (TrainConfig)
    :return: the advanced state
    """
    for name, grad in grads.items():
        if not np.all(np.isfinite(grad)):
            raise NonFiniteGradientError(name)
    state.step += 1
    beta1, beta2 = config.beta1, config.beta2
    correction1 = 1.0 - beta1 ** state.step
    correction2 = 1.0 - beta2 ** state.step
    for name, value in params.items():
        grad = grads.get(name)
        if grad is None:
            continue
        first = state.first_moment.setdefault(name, np.zeros_like(value))
        second = state.second_moment.setdefault(name, np.zeros_like(value))
        first *= beta1
        first += (1.0 - beta1) * grad
        second *= beta2
        second += (1.0 - beta2) * grad * grad
        value -= config.learning_rate * (first / correction1) / (np.sqrt(second / correction2) + config.epsilon)
    return state


class Adam(object):
    def __init__(self, params: dict, config):
        self._params = params
        self._config = config
        self.state = AdamState.zeros(params)

    def step(self, grads: dict):
        adam_step(self._params, grads, self.state, self._config)
