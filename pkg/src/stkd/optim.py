"""Adam optimizer with bias correction and per-parameter frozen-row masks."""

from __future__ import annotations

import numpy as np

from .errors import ConfigError
from .tensor import Tensor


class AdamState:
    """First/second moment buffers plus the shared step counter."""

    def __init__(self, shapes, dtype=np.float64):
        self.m = [np.zeros(s, dtype=dtype) for s in shapes]
        self.v = [np.zeros(s, dtype=dtype) for s in shapes]
        self.t = 0


def adam_step(params, grads, state: AdamState, lr: float = 0.001,
              beta1: float = 0.9, beta2: float = 0.98, eps: float = 1e-8):
    """One Adam update applied in place to a list of numpy parameter arrays.

    m <- b1*m + (1-b1)*g ; v <- b2*v + (1-b2)*g^2
    p <- p - lr * (m / (1-b1^t)) / (sqrt(v / (1-b2^t)) + eps)
    """
    state.t += 1
    c1 = 1.0 - beta1 ** state.t
    c2 = 1.0 - beta2 ** state.t
    for p, g, m, v in zip(params, grads, state.m, state.v):
        m *= beta1
        m += (1.0 - beta1) * g
        v *= beta2
        v += (1.0 - beta2) * (g * g)
        if lr != 0.0:
            p -= lr * (m / c1) / (np.sqrt(v / c2) + eps)


class Adam:
    """Adam over a dict of named Tensor parameters.

    `freeze_rows[name]` lists row indices whose gradient is zeroed before the
    update (used to pin padding-embedding rows at zero); `freeze[name] = True`
    freezes a parameter entirely.
    """

    def __init__(self, params: dict[str, Tensor], lr: float = 0.001,
                 beta1: float = 0.9, beta2: float = 0.98, eps: float = 1e-8,
                 freeze_rows: dict[str, list[int]] | None = None,
                 freeze: set[str] | None = None):
        if lr < 0:
            raise ConfigError(f"learning rate must be >= 0, got {lr}")
        if not (0.0 <= beta1 < 1.0 and 0.0 <= beta2 < 1.0):
            raise ConfigError(f"betas must lie in [0, 1): got {beta1}, {beta2}")
        self.params = params
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.freeze_rows = freeze_rows or {}
        self.freeze = freeze or set()
        self.names = sorted(params.keys())
        self.state = AdamState([params[n].data.shape for n in self.names],
                               dtype=params[next(iter(params))].data.dtype
                               if params else np.float64)

    def zero_grad(self) -> None:
        for p in self.params.values():
            p.grad = None

    def step(self) -> None:
        grads = []
        for n in self.names:
            p = self.params[n]
            g = p.grad if p.grad is not None else np.zeros_like(p.data)
            if n in self.freeze:
                g = np.zeros_like(g)
            elif n in self.freeze_rows:
                g = g.copy()
                g[self.freeze_rows[n]] = 0.0
            grads.append(g)
        adam_step([self.params[n].data for n in self.names], grads, self.state,
                  lr=self.lr, beta1=self.beta1, beta2=self.beta2, eps=self.eps)
        # A frozen row can still drift through the eps term once its moments are
        # nonzero; they never become nonzero here, but re-pin defensively.
        for n, rows_ in self.freeze_rows.items():
            self.params[n].data[rows_] = 0.0
