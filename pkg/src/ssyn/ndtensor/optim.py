"""Gradient-descent parameter updates: plain and adaptive (bias-corrected moments)."""

import numpy as np

from ..errors import ContractError
from .tensor import Tensor

MODES = ("plain", "adaptive")


class Optimizer:
    """Holds per-parameter update state and applies one step per call.

    plain:    p <- p - lr * g
    adaptive: first/second-moment estimates with bias correction
              (decay rates ``betas``, stabilizer ``eps``).

    Gradients are cleared after a successful step.
    """

    def __init__(self, params, lr: float = 1e-3, mode: str = "adaptive",
                 betas: tuple = (0.9, 0.999), eps: float = 1e-8):
        if mode not in MODES:
            raise ContractError(f"optimizer mode must be one of {MODES}, got {mode!r}")
        self.params = list(params)
        self.lr = float(lr)
        self.mode = mode
        self.beta1, self.beta2 = betas
        self.eps = float(eps)
        self.step_count = 0
        self._m = [np.zeros_like(p.data) for p in self.params]
        self._v = [np.zeros_like(p.data) for p in self.params]

    def _param_label(self, i: int, p: Tensor) -> str:
        return p.name if p.name else f"param[{i}]"

    def step(self):
        for i, p in enumerate(self.params):
            if p.grad is None:
                raise ContractError(f"{self._param_label(i, p)} has no gradient; "
                                    "run backward before stepping")
            if p.grad.shape != p.data.shape:
                raise ContractError(f"{self._param_label(i, p)} gradient shape {p.grad.shape} "
                                    f"!= parameter shape {p.data.shape}")
        self.step_count += 1
        t = self.step_count
        for i, p in enumerate(self.params):
            g = p.grad
            if self.mode == "plain":
                p.data = p.data - np.asarray(self.lr, dtype=p.dtype) * g
            else:
                self._m[i] = self.beta1 * self._m[i] + (1.0 - self.beta1) * g
                self._v[i] = self.beta2 * self._v[i] + (1.0 - self.beta2) * (g * g)
                m_hat = self._m[i] / (1.0 - self.beta1 ** t)
                v_hat = self._v[i] / (1.0 - self.beta2 ** t)
                p.data = p.data - (self.lr * m_hat / (np.sqrt(v_hat) + self.eps)).astype(p.dtype)
            p.grad = None

    def zero_grad(self):
        for p in self.params:
            p.grad = None
