"""Vectorized conv3d kernels built on numpy stride tricks and BLAS.

All three entry points accept float32 or float64 arrays.  float32 inputs are
accumulated in float64 (per the precision policy for reduction sums) and cast
back on return; float64 inputs stay float64 end to end, which is what the
finite-difference checker runs on.

Transient im2col buffers are processed in slabs along the output time axis so
peak memory stays bounded regardless of clip size.
"""

import numpy as np

NAME = "numpy"

# Per-slab budget for the float64 window buffer.
_SLAB_BYTES = 64 * 1024 * 1024


def _out_extent(x: int, k: int, s: int, p: int) -> int:
    return (x + 2 * p - k) // s + 1


def _pad(x, padding):
    pt, ph, pw = padding
    if pt == 0 and ph == 0 and pw == 0:
        return x
    return np.pad(x, ((0, 0), (0, 0), (pt, pt), (ph, ph), (pw, pw)))


def _window_view(xp, kernel_hw, stride):
    """Read-only sliding-window view (B, C, To, Ho, Wo, kt, kh, kw)."""
    kt, kh, kw = kernel_hw
    st, sh, sw = stride
    b, c, tp, hp, wp = xp.shape
    to = (tp - kt) // st + 1
    ho = (hp - kh) // sh + 1
    wo = (wp - kw) // sw + 1
    bs, cs, ts, hs, ws = xp.strides
    return np.lib.stride_tricks.as_strided(
        xp,
        shape=(b, c, to, ho, wo, kt, kh, kw),
        strides=(bs, cs, ts * st, hs * sh, ws * sw, ts, hs, ws),
        writeable=False,
    )


def _slab_len(total_to, per_to_bytes):
    if per_to_bytes <= 0:
        return total_to
    return max(1, min(total_to, _SLAB_BYTES // per_to_bytes))


def conv3d_forward(x, w, stride, padding):
    """Cross-correlate x (B,Ci,T,H,W) with w (Co,Ci,kt,kh,kw)."""
    out_dtype = np.result_type(x.dtype, w.dtype)
    b, ci, t, h, wd = x.shape
    co, _, kt, kh, kw = w.shape
    to = _out_extent(t, kt, stride[0], padding[0])
    ho = _out_extent(h, kh, stride[1], padding[1])
    wo = _out_extent(wd, kw, stride[2], padding[2])

    xp = _pad(x, padding)
    win = _window_view(xp, (kt, kh, kw), stride)
    w64 = np.ascontiguousarray(w, dtype=np.float64)

    y = np.empty((b, co, to, ho, wo), dtype=out_dtype)
    step = _slab_len(to, b * ho * wo * ci * kt * kh * kw * 8)
    for t0 in range(0, to, step):
        t1 = min(to, t0 + step)
        slab = win[:, :, t0:t1].astype(np.float64)
        # (B, to, Ho, Wo, Co) <- contract over (Ci, kt, kh, kw)
        part = np.tensordot(slab, w64, axes=([1, 5, 6, 7], [1, 2, 3, 4]))
        y[:, :, t0:t1] = np.moveaxis(part, 4, 1)
    return y


def conv3d_backward_input(gy, w, in_shape, stride, padding):
    """Gradient of conv3d_forward w.r.t. its input (col2im scatter)."""
    out_dtype = np.result_type(gy.dtype, w.dtype)
    b, ci, t, h, wd = in_shape
    co, _, kt, kh, kw = w.shape
    st, sh, sw = stride
    pt, ph, pw = padding
    to, ho, wo = gy.shape[2], gy.shape[3], gy.shape[4]

    gxp = np.zeros((b, ci, t + 2 * pt, h + 2 * ph, wd + 2 * pw), dtype=np.float64)
    w64 = np.ascontiguousarray(w, dtype=np.float64)

    step = _slab_len(to, b * ho * wo * ci * kt * kh * kw * 8)
    for t0 in range(0, to, step):
        t1 = min(to, t0 + step)
        g64 = gy[:, :, t0:t1].astype(np.float64)
        # (B, to, Ho, Wo, Ci, kt, kh, kw)
        cols = np.tensordot(g64, w64, axes=([1], [0]))
        cols = np.moveaxis(cols, (1, 2, 3), (2, 3, 4))  # (B, Ci, to, Ho, Wo, ...)
        for dt in range(kt):
            tsl = slice(dt + t0 * st, dt + t1 * st, st)
            for dh in range(kh):
                hsl = slice(dh, dh + ho * sh, sh)
                for dw in range(kw):
                    wsl = slice(dw, dw + wo * sw, sw)
                    gxp[:, :, tsl, hsl, wsl] += cols[..., dt, dh, dw]

    gx = gxp[:, :, pt : pt + t, ph : ph + h, pw : pw + wd]
    return np.ascontiguousarray(gx, dtype=out_dtype)


def conv3d_backward_kernel(gy, x, kernel_shape, stride, padding):
    """Gradient of conv3d_forward w.r.t. the kernel."""
    out_dtype = np.result_type(gy.dtype, x.dtype)
    co, ci, kt, kh, kw = kernel_shape
    to = gy.shape[2]

    xp = _pad(x, padding)
    win = _window_view(xp, (kt, kh, kw), stride)

    gw = np.zeros(kernel_shape, dtype=np.float64)
    step = _slab_len(to, gy.shape[0] * gy.shape[3] * gy.shape[4] * ci * kt * kh * kw * 8)
    for t0 in range(0, to, step):
        t1 = min(to, t0 + step)
        slab = win[:, :, t0:t1].astype(np.float64)
        g64 = gy[:, :, t0:t1].astype(np.float64)
        # (Co, Ci, kt, kh, kw) <- contract over (B, to, Ho, Wo)
        part = np.tensordot(g64, slab, axes=([0, 2, 3, 4], [0, 2, 3, 4]))
        gw += part
    return gw.astype(out_dtype, copy=False)
