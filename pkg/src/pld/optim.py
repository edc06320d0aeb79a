"""Stochastic gradient descent with classic momentum.

The velocity recurrence is v <- momentum * v + grad, value <- value - lr * v,
so momentum=0 reduces to plain SGD. A step is rejected wholesale if any
gradient contains a non-finite entry; no parameter is touched in that case.
"""

import numpy as np


class OptimError(RuntimeError):
    """A parameter update could not be applied."""


class SGD:
    def __init__(self, params, lr: float = 0.05, momentum: float = 0.9):
        if lr < 0:
            raise ValueError(f"lr must be >= 0, got {lr}")
        if momentum < 0:
            raise ValueError(f"momentum must be >= 0, got {momentum}")
        self.params = list(params)
        self.lr = float(lr)
        self.momentum = float(momentum)
        self._velocity = [np.zeros_like(p.data) for p in self.params]

    def step(self) -> None:
        for p in self.params:
            if not np.isfinite(p.grad).all():
                raise OptimError(f"non-finite gradient in {p!r}")
        for p, v in zip(self.params, self._velocity):
            v *= self.momentum
            v += p.grad
            p.data -= np.float32(self.lr) * v

    def zero_grads(self) -> None:
        for p in self.params:
            p.grad[...] = 0.0
