"""Differentiable operations over :class:`Tensor`.

Reductions (mse, sums, conv accumulations) run their sums in float64 and cast
back, so float32 gradients stay stable under finite-difference checks.
"""

import numpy as np

from ..errors import ConfigurationError, ContractError, DimensionError
from . import kernels
from .tensor import Tensor, as_tensor, record

_CHUNK = 1 << 22


def _unbroadcast(g: np.ndarray, shape: tuple) -> np.ndarray:
    """Sum ``g`` down to ``shape`` (inverse of numpy broadcasting)."""
    if g.shape == shape:
        return g
    extra = g.ndim - len(shape)
    if extra:
        g = g.sum(axis=tuple(range(extra)))
    axes = tuple(i for i, n in enumerate(shape) if n == 1 and g.shape[i] != 1)
    if axes:
        g = g.sum(axis=axes, keepdims=True)
    return g.reshape(shape)


def _sumsq64(arr: np.ndarray) -> float:
    """Sum of squares with float64 accumulation, chunked to bound memory."""
    flat = arr.reshape(-1)
    total = 0.0
    for i in range(0, flat.size, _CHUNK):
        part = flat[i : i + _CHUNK].astype(np.float64, copy=False)
        total += float(np.dot(part, part))
    return total


def _triple(v, what: str) -> tuple:
    if isinstance(v, int):
        return (v, v, v)
    t = tuple(int(n) for n in v)
    if len(t) != 3:
        raise ContractError(f"{what} must be an int or a length-3 tuple, got {v!r}")
    return t


def add(a, b) -> Tensor:
    a = as_tensor(a)
    b = as_tensor(b, dtype=a.dtype)
    out = Tensor(a.data + b.data)

    def back(g):
        if a.requires_grad:
            a.accumulate_grad(_unbroadcast(g, a.data.shape).astype(a.dtype, copy=False))
        if b.requires_grad:
            b.accumulate_grad(_unbroadcast(g, b.data.shape).astype(b.dtype, copy=False))

    return record(out, (a, b), back)


def sub(a, b) -> Tensor:
    a = as_tensor(a)
    b = as_tensor(b, dtype=a.dtype)
    out = Tensor(a.data - b.data)

    def back(g):
        if a.requires_grad:
            a.accumulate_grad(_unbroadcast(g, a.data.shape).astype(a.dtype, copy=False))
        if b.requires_grad:
            b.accumulate_grad(_unbroadcast(-g, b.data.shape).astype(b.dtype, copy=False))

    return record(out, (a, b), back)


def mul(a, b) -> Tensor:
    a = as_tensor(a)
    b = as_tensor(b, dtype=a.dtype)
    out = Tensor(a.data * b.data)

    def back(g):
        if a.requires_grad:
            a.accumulate_grad(_unbroadcast(g * b.data, a.data.shape).astype(a.dtype, copy=False))
        if b.requires_grad:
            b.accumulate_grad(_unbroadcast(g * a.data, b.data.shape).astype(b.dtype, copy=False))

    return record(out, (a, b), back)


def sum_all(x: Tensor) -> Tensor:
    x = as_tensor(x)
    out = Tensor(np.asarray(x.data.sum(dtype=np.float64), dtype=x.dtype))

    def back(g):
        x.accumulate_grad(np.broadcast_to(g.astype(x.dtype, copy=False), x.data.shape).copy())

    return record(out, (x,), back)


def mean_all(x: Tensor) -> Tensor:
    x = as_tensor(x)
    n = x.data.size
    out = Tensor(np.asarray(x.data.sum(dtype=np.float64) / n, dtype=x.dtype))

    def back(g):
        gv = (g.astype(np.float64) / n).astype(x.dtype)
        x.accumulate_grad(np.broadcast_to(gv, x.data.shape).copy())

    return record(out, (x,), back)


def reshape(x: Tensor, shape) -> Tensor:
    out = Tensor(x.data.reshape(shape))

    def back(g):
        x.accumulate_grad(g.reshape(x.data.shape))

    return record(out, (x,), back)


def moveaxis(x: Tensor, source, destination) -> Tensor:
    out = Tensor(np.ascontiguousarray(np.moveaxis(x.data, source, destination)))

    def back(g):
        x.accumulate_grad(np.ascontiguousarray(np.moveaxis(g, destination, source)))

    return record(out, (x,), back)


def detach(x: Tensor) -> Tensor:
    return x.detach()


def relu(x: Tensor) -> Tensor:
    out = Tensor(np.maximum(x.data, 0))

    def back(g):
        x.accumulate_grad(g * (x.data > 0))

    return record(out, (x,), back)


def sigmoid(x: Tensor) -> Tensor:
    data = 1.0 / (1.0 + np.exp(-x.data))
    out = Tensor(data)

    def back(g):
        x.accumulate_grad(g * (data * (1.0 - data)))

    return record(out, (x,), back)


def tanh(x: Tensor) -> Tensor:
    data = np.tanh(x.data)
    out = Tensor(data)

    def back(g):
        x.accumulate_grad(g * (1.0 - data * data))

    return record(out, (x,), back)


_ACTIVATIONS = {"relu": relu, "sigmoid": sigmoid, "tanh": tanh}


def activation(x: Tensor, kind: str) -> Tensor:
    try:
        return _ACTIVATIONS[kind](x)
    except KeyError:
        raise ContractError(f"unknown activation {kind!r}; expected one of {sorted(_ACTIVATIONS)}")


def linear(x: Tensor, weight: Tensor, bias: Tensor) -> Tensor:
    """Affine map: out[b, o] = bias[o] + sum_i x[b, i] * weight[o, i]."""
    if x.data.ndim != 2 or weight.data.ndim != 2 or bias.data.ndim != 1:
        raise DimensionError(
            f"linear expects x (B, In), weight (Out, In), bias (Out); got "
            f"{x.shape}, {weight.shape}, {bias.shape}"
        )
    if x.shape[1] != weight.shape[1]:
        raise DimensionError(
            f"linear: x axis 1 ({x.shape[1]}) != weight axis 1 ({weight.shape[1]})"
        )
    if bias.shape[0] != weight.shape[0]:
        raise DimensionError(
            f"linear: bias axis 0 ({bias.shape[0]}) != weight axis 0 ({weight.shape[0]})"
        )
    out = Tensor(x.data @ weight.data.T + bias.data)

    def back(g):
        if x.requires_grad:
            x.accumulate_grad((g @ weight.data).astype(x.dtype, copy=False))
        if weight.requires_grad:
            weight.accumulate_grad((g.T @ x.data).astype(weight.dtype, copy=False))
        if bias.requires_grad:
            bias.accumulate_grad(g.sum(axis=0, dtype=np.float64).astype(bias.dtype))

    return record(out, (x, weight, bias), back)


def _conv_pre(x, kernel, bias, stride, padding, transpose: bool):
    if x.data.ndim != 5 or kernel.data.ndim != 5:
        raise DimensionError(
            f"conv3d expects 5-D input and kernel, got {x.shape} and {kernel.shape}"
        )
    st = _triple(stride, "stride")
    pd = _triple(padding, "padding")
    cin_axis = 0 if transpose else 1
    if x.shape[1] != kernel.shape[cin_axis]:
        raise DimensionError(
            f"input channels (axis 1 = {x.shape[1]}) != kernel input channels "
            f"(axis {cin_axis} = {kernel.shape[cin_axis]})"
        )
    cout = kernel.shape[1] if transpose else kernel.shape[0]
    if bias.data.ndim != 1 or bias.shape[0] != cout:
        raise DimensionError(f"bias shape {bias.shape} != output channels ({cout},)")
    return st, pd, cout


def conv3d(x: Tensor, kernel: Tensor, bias: Tensor, stride=1, padding=0) -> Tensor:
    """Strided zero-padded cross-correlation.

    x: (B, Cin, T, H, W); kernel: (Cout, Cin, kT, kH, kW); bias: (Cout,).
    """
    st, pd, cout = _conv_pre(x, kernel, bias, stride, padding, transpose=False)
    out_sp = []
    for axis, name in ((2, "T"), (3, "H"), (4, "W")):
        i = axis - 2
        ext = (x.shape[axis] + 2 * pd[i] - kernel.shape[axis]) // st[i] + 1
        if x.shape[axis] + 2 * pd[i] - kernel.shape[axis] < 0 or ext < 1:
            raise ConfigurationError(
                f"conv3d output extent on axis {name} is {ext} "
                f"(input {x.shape[axis]}, kernel {kernel.shape[axis]}, "
                f"stride {st[i]}, padding {pd[i]})"
            )
        out_sp.append(ext)

    y = kernels.conv3d_forward(x.data, kernel.data, st, pd)
    y += bias.data.reshape(1, -1, 1, 1, 1)
    out = Tensor(y)

    def back(g):
        g = np.ascontiguousarray(g)
        if x.requires_grad:
            x.accumulate_grad(kernels.conv3d_backward_input(g, kernel.data, x.data.shape, st, pd))
        if kernel.requires_grad:
            kernel.accumulate_grad(
                kernels.conv3d_backward_kernel(g, x.data, kernel.data.shape, st, pd)
            )
        if bias.requires_grad:
            bias.accumulate_grad(g.sum(axis=(0, 2, 3, 4), dtype=np.float64).astype(bias.dtype))

    return record(out, (x, kernel, bias), back)


def conv3d_transpose(x: Tensor, kernel: Tensor, bias: Tensor, stride=1, padding=0) -> Tensor:
    """Transposed convolution (gradient-of-conv semantics).

    x: (B, Cin, T, H, W); kernel: (Cin, Cout, kT, kH, kW); bias: (Cout,).
    Output extent per axis: (X - 1) * s - 2p + k.
    """
    st, pd, cout = _conv_pre(x, kernel, bias, stride, padding, transpose=True)
    out_sp = []
    for axis, name in ((2, "T"), (3, "H"), (4, "W")):
        i = axis - 2
        ext = (x.shape[axis] - 1) * st[i] - 2 * pd[i] + kernel.shape[axis]
        if ext < 1:
            raise ConfigurationError(
                f"conv3d_transpose output extent on axis {name} is {ext} "
                f"(input {x.shape[axis]}, kernel {kernel.shape[axis]}, "
                f"stride {st[i]}, padding {pd[i]})"
            )
        out_sp.append(ext)
    out_shape = (x.shape[0], cout, *out_sp)

    y = kernels.conv3d_backward_input(np.ascontiguousarray(x.data), kernel.data, out_shape, st, pd)
    y = y + bias.data.reshape(1, -1, 1, 1, 1)
    out = Tensor(y)

    def back(g):
        g = np.ascontiguousarray(g)
        if x.requires_grad:
            x.accumulate_grad(kernels.conv3d_forward(g, kernel.data, st, pd))
        if kernel.requires_grad:
            kernel.accumulate_grad(
                kernels.conv3d_backward_kernel(
                    np.ascontiguousarray(x.data), g, kernel.data.shape, st, pd
                )
            )
        if bias.requires_grad:
            bias.accumulate_grad(g.sum(axis=(0, 2, 3, 4), dtype=np.float64).astype(bias.dtype))

    return record(out, (x, kernel, bias), back)


def mse(pred: Tensor, target: Tensor) -> Tensor:
    """Mean over all elements of (pred - target)^2; float64 accumulation."""
    if pred.shape != target.shape:
        raise DimensionError(f"mse: pred shape {pred.shape} != target shape {target.shape}")
    if target.requires_grad:
        raise ContractError("mse target must not require gradients; detach it first")
    dtype = np.result_type(pred.dtype, target.dtype)
    diff = pred.data.astype(dtype, copy=False) - target.data.astype(dtype, copy=False)
    n = diff.size
    out = Tensor(np.asarray(_sumsq64(diff) / n, dtype=dtype))

    def back(g):
        scale = 2.0 * float(g.astype(np.float64)) / n
        pred.accumulate_grad((diff * np.asarray(scale, dtype=dtype)).astype(pred.dtype, copy=False))

    return record(out, (pred, target), back)


def straight_through(encoded: Tensor, quantized: Tensor) -> Tensor:
    """Forward value of ``quantized``; gradients pass unchanged to ``encoded``.

    No gradient reaches ``quantized`` (or anything behind it) through this op.
    """
    if encoded.shape != quantized.shape:
        raise DimensionError(
            f"straight_through: shapes differ, {encoded.shape} vs {quantized.shape}"
        )
    out = Tensor(quantized.data.copy())

    def back(g):
        encoded.accumulate_grad(g.astype(encoded.dtype, copy=False))

    return record(out, (encoded,), back)


def embedding_rows(table: Tensor, indices: np.ndarray) -> Tensor:
    """Gather rows of a (K, D) table; backward scatter-adds into the table."""
    if table.data.ndim != 2:
        raise DimensionError(f"embedding table must be 2-D, got {table.shape}")
    idx = np.asarray(indices)
    if idx.ndim != 1 or not np.issubdtype(idx.dtype, np.integer):
        raise ContractError("indices must be a 1-D integer array")
    out = Tensor(table.data[idx])

    def back(g):
        gt = np.zeros_like(table.data, dtype=np.float64)
        np.add.at(gt, idx, g.astype(np.float64, copy=False))
        table.accumulate_grad(gt.astype(table.dtype))

    return record(out, (table,), back)
