"""Finite-difference verification of backward rules.

The analytic gradient is taken from the float32 tape.  The finite-difference
quotient is evaluated on a float64 copy of the input (ops promote mixed
precision), which keeps the quotient's noise floor far below the float32
gradients being judged.

Non-scalar functions are reduced with a fixed pseudo-random cotangent so that
sign errors cannot cancel across output elements.
"""

import numpy as np

from ..errors import NumericError
from .tensor import Tensor, backward, no_grad


def _as_scalar_fn(f, probe_out_shape):
    if probe_out_shape == ():
        return f, None
    rng = np.random.default_rng(0x5EED)
    cot = rng.standard_normal(probe_out_shape)

    def reduced(x):
        from . import ops

        y = f(x)
        weights = Tensor(cot.astype(y.dtype))
        return ops.sum_all(ops.mul(y, weights))

    return reduced, cot


def grad_check(f, x: Tensor, epsilon: float = 1e-3) -> float:
    """Max relative disagreement between tape gradients and central differences.

    error = max_i |analytic_i - numeric_i| / max(1e-8, |analytic_i| + |numeric_i|)
    """
    if epsilon <= 0:
        raise NumericError(f"epsilon must be positive, got {epsilon}")

    with no_grad():
        probe = f(Tensor(x.data.copy()))
    fn, _ = _as_scalar_fn(f, probe.data.shape)

    leaf = Tensor(x.data.copy().astype(np.float32), requires_grad=True)
    loss = fn(leaf)
    backward(loss)
    analytic = leaf.grad.astype(np.float64)
    if not np.all(np.isfinite(analytic)):
        raise NumericError("non-finite analytic gradient")

    base = x.data.astype(np.float64).copy()
    numeric = np.empty_like(base)
    flat = base.reshape(-1)
    num_flat = numeric.reshape(-1)
    with no_grad():
        for i in range(flat.size):
            orig = flat[i]
            flat[i] = orig + epsilon
            hi = float(fn(Tensor(base.copy())).data)
            flat[i] = orig - epsilon
            lo = float(fn(Tensor(base.copy())).data)
            flat[i] = orig
            if not (np.isfinite(hi) and np.isfinite(lo)):
                raise NumericError(f"non-finite loss during finite differences at element {i}")
            num_flat[i] = (hi - lo) / (2.0 * epsilon)

    denom = np.maximum(1e-8, np.abs(analytic) + np.abs(numeric))
    return float(np.max(np.abs(analytic - numeric) / denom))


def verification_suite(seed: int = 0):
    """Run grad_check over every differentiable op at small shapes.

    Returns a list of (op name, max relative error) pairs.
    """
    from . import ops

    rng = np.random.default_rng(seed)

    def t(*shape):
        return Tensor(rng.standard_normal(shape).astype(np.float32))

    x = t(2, 5)
    w = t(3, 5)
    b = t(3)
    vol = t(1, 2, 4, 8, 8)
    kern = t(3, 2, 4, 4, 4)
    cb = t(3)
    kern_t = t(3, 2, 4, 4, 4)
    cb_t = t(2)
    target = t(2, 5)
    table = t(6, 4)
    idx = rng.integers(0, 6, size=7)
    # keep relu inputs clear of the kink so central differences stay valid
    xk = Tensor(np.where(np.abs(x.data) < 0.25, 0.5, x.data).astype(np.float32))

    def conv_out(v):
        return ops.conv3d(v, kern, cb, stride=2, padding=1)

    cases = [
        ("add", lambda a: ops.add(a, Tensor(x.data * 0.5)), x),
        ("sub", lambda a: ops.sub(a, Tensor(x.data * 0.5)), x),
        ("mul", lambda a: ops.mul(a, Tensor(x.data * 0.5 + 2.0)), x),
        ("relu", ops.relu, xk),
        ("sigmoid", ops.sigmoid, x),
        ("tanh", ops.tanh, x),
        ("mean_all", ops.mean_all, x),
        ("linear_input", lambda a: ops.linear(a, w, b), x),
        ("linear_weight", lambda ww: ops.linear(x, ww, b), w),
        ("linear_bias", lambda bb: ops.linear(x, w, bb), b),
        ("sum_all", ops.sum_all, x),
        ("mse", lambda a: ops.mse(a, target), x),
        ("reshape", lambda a: ops.reshape(a, (5, 2)), x),
        ("moveaxis", lambda a: ops.moveaxis(a, 0, 1), x),
        ("conv3d_input", conv_out, vol),
        ("conv3d_weight", lambda k: ops.conv3d(vol, k, cb, stride=2, padding=1), kern),
        ("conv3d_bias", lambda bb: ops.conv3d(vol, kern, bb, stride=2, padding=1), cb),
        ("conv3d_transpose",
         lambda k: ops.conv3d_transpose(conv_out(vol), k, cb_t, stride=2, padding=1),
         kern_t),
        ("embedding_rows", lambda tab: ops.embedding_rows(tab, idx), table),
    ]

    results = []
    for name, fn, arg in cases:
        results.append((name, grad_check(fn, arg)))
    return results
