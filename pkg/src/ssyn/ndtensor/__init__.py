"""Dense-tensor engine with reverse-mode autodiff."""

from . import kernels, ops
from .gradcheck import grad_check
from .optim import Optimizer
from .tensor import Tensor, backward, is_grad_enabled, no_grad

__all__ = [
    "Tensor",
    "backward",
    "grad_check",
    "Optimizer",
    "no_grad",
    "is_grad_enabled",
    "ops",
    "kernels",
]
