"""Adam, Nadam, and Adagrad parameter updates.

Parameters and gradients travel as name->array dicts; updates happen in
place. Adam/Nadam use bias-corrected moments with the epsilon added to the
root (first Adam step is -lr*g/(|g|+eps) elementwise); Nadam applies the
Nesterov look-ahead to the corrected first moment.
"""
from __future__ import annotations

import numpy as np

BETA1 = 0.9
BETA2 = 0.999
EPS = 1e-8

OPTIMIZER_NAMES = ("Adam", "Nadam", "Adagrad")


class Optimizer:
    def __init__(self, name: str, learning_rate: float):
        if name not in OPTIMIZER_NAMES:
            raise ValueError(f"unknown optimizer {name!r}")
        self.name = name
        self.lr = learning_rate
        self.t = 0
        self._m: dict[str, np.ndarray] = {}
        self._v: dict[str, np.ndarray] = {}

    def _slot(self, store: dict, key: str, like: np.ndarray) -> np.ndarray:
        if key not in store:
            store[key] = np.zeros_like(like)
        return store[key]

    def step(self, params: dict[str, np.ndarray], grads: dict[str, np.ndarray]) -> None:
        self.t += 1
        for key, p in params.items():
            g = grads[key]
            if self.name == "Adagrad":
                acc = self._slot(self._v, key, p)
                acc += g * g
                p -= self.lr * g / (np.sqrt(acc) + EPS)
                continue
            m = self._slot(self._m, key, p)
            v = self._slot(self._v, key, p)
            m *= BETA1
            m += (1 - BETA1) * g
            v *= BETA2
            v += (1 - BETA2) * g * g
            m_hat = m / (1 - BETA1**self.t)
            v_hat = v / (1 - BETA2**self.t)
            if self.name == "Nadam":
                m_hat = BETA1 * m_hat + (1 - BETA1) * g / (1 - BETA1**self.t)
            p -= self.lr * m_hat / (np.sqrt(v_hat) + EPS)
