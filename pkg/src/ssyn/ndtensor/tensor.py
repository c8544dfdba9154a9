"""Dense float tensor with a reverse-mode autodiff tape.

Every differentiable op wires its output tensor to its inputs and attaches a
backward closure.  ``backward`` walks the recorded subgraph in exact reverse
execution order (tensors carry a global creation sequence number), so two
backward passes over the same tape accumulate gradients identically, bit for
bit.

Data is float32 in normal operation.  float64 tensors are supported so the
finite-difference checker can evaluate forward passes above the float32 noise
floor; ops promote mixed inputs to float64.
"""

import contextlib
import itertools

import numpy as np

from ..errors import ContractError

_seq_counter = itertools.count()
_grad_enabled = True


@contextlib.contextmanager
def no_grad():
    """Disable tape recording inside the block (inference / frozen nets)."""
    global _grad_enabled
    prev = _grad_enabled
    _grad_enabled = False
    try:
        yield
    finally:
        _grad_enabled = prev


def is_grad_enabled() -> bool:
    return _grad_enabled


class Tensor:
    """N-dimensional float array, optionally tracked on the autodiff tape."""

    __slots__ = ("data", "grad", "requires_grad", "name", "_parents", "_backward_fn", "_seq")

    def __init__(self, data, requires_grad: bool = False, name: str | None = None):
        arr = np.asarray(data)
        if arr.dtype not in (np.float32, np.float64):
            arr = arr.astype(np.float32)
        self.data = arr
        self.requires_grad = requires_grad
        self.grad = None
        self.name = name
        self._parents = ()
        self._backward_fn = None
        self._seq = next(_seq_counter)

    @property
    def shape(self) -> tuple:
        return self.data.shape

    @property
    def dtype(self):
        return self.data.dtype

    @property
    def size(self) -> int:
        return self.data.size

    def item(self) -> float:
        if self.data.size != 1:
            raise ContractError(f"item() needs a single-element tensor, got shape {self.shape}")
        return float(self.data.reshape(()))

    def detach(self) -> "Tensor":
        """Leaf view of the same values; gradients stop here."""
        return Tensor(self.data, requires_grad=False)

    def zero_grad(self):
        self.grad = None

    def accumulate_grad(self, g: np.ndarray):
        if self.grad is None:
            self.grad = g.copy()
        else:
            self.grad = self.grad + g

    def __repr__(self):
        tag = f" name={self.name!r}" if self.name else ""
        return f"Tensor(shape={self.shape}, dtype={self.data.dtype}{tag})"

    # Small arithmetic surface; the module-level ops carry the real work.
    def __add__(self, other):
        from . import ops

        return ops.add(self, other)

    __radd__ = __add__

    def __sub__(self, other):
        from . import ops

        return ops.sub(self, other)

    def __mul__(self, other):
        from . import ops

        return ops.mul(self, other)

    __rmul__ = __mul__

    def __neg__(self):
        from . import ops

        return ops.mul(self, -1.0)


def as_tensor(value, dtype=np.float32) -> Tensor:
    if isinstance(value, Tensor):
        return value
    return Tensor(np.asarray(value, dtype=dtype))


def record(out: Tensor, parents: tuple, backward_fn) -> Tensor:
    """Attach tape edges to ``out`` if recording is on and any parent needs grads."""
    if _grad_enabled and any(p.requires_grad for p in parents):
        out.requires_grad = True
        out._parents = parents
        out._backward_fn = backward_fn
    return out


def backward(loss: Tensor):
    """Accumulate d(loss)/d(leaf) into every reachable requires_grad tensor."""
    if loss.data.size != 1:
        raise ContractError(f"backward expects a scalar loss, got shape {loss.shape}")

    # Collect the subgraph, then replay in reverse creation order.
    nodes = []
    seen = set()
    stack = [loss]
    while stack:
        node = stack.pop()
        if id(node) in seen:
            continue
        seen.add(id(node))
        if node._backward_fn is not None:
            nodes.append(node)
            stack.extend(node._parents)
    nodes.sort(key=lambda n: n._seq, reverse=True)

    loss.grad = np.ones_like(loss.data)
    for node in nodes:
        if node.grad is None:
            continue
        node._backward_fn(node.grad)
