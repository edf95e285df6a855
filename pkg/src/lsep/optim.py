"""Minimal in-place Adam used by the separation trainer and the MI estimator."""

from __future__ import annotations

import numpy as np


class Adam:
    """Adam over a dict of named parameter arrays, updated in place.

    Defaults follow the common convention (beta1=0.9, beta2=0.999,
    eps=1e-8). `maximize=True` flips the step for ascent objectives.
    """

    def __init__(
        self,
        params: dict[str, np.ndarray],
        learning_rate: float,
        beta1: float = 0.9,
        beta2: float = 0.999,
        eps: float = 1e-8,
        maximize: bool = False,
    ):
        self.params = params
        self.lr = learning_rate
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.sign = 1.0 if maximize else -1.0
        self.t = 0
        self.m = {k: np.zeros_like(p) for k, p in params.items()}
        self.v = {k: np.zeros_like(p) for k, p in params.items()}

    def step(self, grads: dict[str, np.ndarray]) -> None:
        self.t += 1
        b1c = 1.0 - self.beta1**self.t
        b2c = 1.0 - self.beta2**self.t
        for name, g in grads.items():
            m = self.m[name]
            v = self.v[name]
            m *= self.beta1
            m += (1.0 - self.beta1) * g
            v *= self.beta2
            v += (1.0 - self.beta2) * g * g
            self.params[name] += self.sign * self.lr * (m / b1c) / (np.sqrt(v / b2c) + self.eps)
