"""Kernel backend selection.

The compiled Cython kernels are preferred for float32 work when the
extension built; otherwise everything runs on the numpy fallback.  float64
arrays (used by the finite-difference checker) always take the numpy path,
which is natively float64.

Set SSYN_KERNELS=numpy or SSYN_KERNELS=cython to force a backend.
"""

import os

import numpy as np

from . import numpy_backend

try:
    from . import _cyconv
except ImportError:
    _cyconv = None

_FORCED = os.environ.get("SSYN_KERNELS", "").strip().lower()
if _FORCED == "cython":
    if _cyconv is None:
        raise ImportError(
            "SSYN_KERNELS=cython but the compiled extension is not available; "
            "reinstall with a working C toolchain or unset SSYN_KERNELS"
        )
    _f32_backend = _cyconv
elif _FORCED == "numpy":
    _f32_backend = numpy_backend
elif _FORCED:
    raise ImportError(f"SSYN_KERNELS must be 'cython' or 'numpy', got {_FORCED!r}")
else:
    _f32_backend = _cyconv if _cyconv is not None else numpy_backend


def backend_name() -> str:
    """Name of the backend serving float32 convolutions."""
    return _f32_backend.NAME


def available_backends() -> list[str]:
    names = [numpy_backend.NAME]
    if _cyconv is not None:
        names.append(_cyconv.NAME)
    return names


def get_backend(name: str):
    """Explicit backend handle, used by the parity tests and the benchmark."""
    if name == "numpy":
        return numpy_backend
    if name == "cython":
        if _cyconv is None:
            raise KeyError("compiled backend not available")
        return _cyconv
    raise KeyError(f"unknown backend {name!r}")


def _pick(*arrays):
    if any(a.dtype == np.float64 for a in arrays):
        return numpy_backend
    return _f32_backend


def conv3d_forward(x, w, stride, padding):
    return _pick(x, w).conv3d_forward(x, w, stride, padding)


def conv3d_backward_input(gy, w, in_shape, stride, padding):
    return _pick(gy, w).conv3d_backward_input(gy, w, in_shape, stride, padding)


def conv3d_backward_kernel(gy, x, kernel_shape, stride, padding):
    return _pick(gy, x).conv3d_backward_kernel(gy, x, kernel_shape, stride, padding)
