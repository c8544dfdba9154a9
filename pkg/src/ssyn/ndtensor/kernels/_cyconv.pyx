# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled conv3d kernels: float32 data, float64 accumulators.

Loop nests are arranged so the innermost loop accumulates into independent
slots (a width-row scratch buffer or a kernel-width row), which keeps the
float64 accumulation order fixed and the chains short.  Single-threaded by
design: results are bitwise reproducible run to run.
"""

import numpy as np

cimport numpy as cnp

NAME = "cython"


def _padded(x, int pt, int ph, int pw):
    if pt == 0 and ph == 0 and pw == 0:
        return np.ascontiguousarray(x, dtype=np.float32)
    return np.pad(np.asarray(x, dtype=np.float32),
                  ((0, 0), (0, 0), (pt, pt), (ph, ph), (pw, pw)))


def conv3d_forward(x, w, stride, padding):
    cdef int st = stride[0], sh = stride[1], sw = stride[2]
    cdef int pt = padding[0], ph = padding[1], pw = padding[2]

    xp_arr = _padded(x, pt, ph, pw)
    w_arr = np.ascontiguousarray(w, dtype=np.float32)

    cdef float[:, :, :, :, ::1] xp = xp_arr
    cdef float[:, :, :, :, ::1] wv = w_arr

    cdef Py_ssize_t b = xp.shape[0], ci = xp.shape[1]
    cdef Py_ssize_t co = wv.shape[0], kt = wv.shape[2], kh = wv.shape[3], kw = wv.shape[4]
    cdef Py_ssize_t to = (xp.shape[2] - kt) // st + 1
    cdef Py_ssize_t ho = (xp.shape[3] - kh) // sh + 1
    cdef Py_ssize_t wo = (xp.shape[4] - kw) // sw + 1

    y_arr = np.empty((b, co, to, ho, wo), dtype=np.float32)
    acc_arr = np.empty(wo, dtype=np.float64)
    cdef float[:, :, :, :, ::1] y = y_arr
    cdef double[::1] acc = acc_arr

    cdef Py_ssize_t ib, ic, io, it, ih, iw, dt, dh, dw
    cdef double wval
    with nogil:
        for ib in range(b):
            for io in range(co):
                for it in range(to):
                    for ih in range(ho):
                        for iw in range(wo):
                            acc[iw] = 0.0
                        for ic in range(ci):
                            for dt in range(kt):
                                for dh in range(kh):
                                    for dw in range(kw):
                                        wval = wv[io, ic, dt, dh, dw]
                                        for iw in range(wo):
                                            acc[iw] += wval * xp[ib, ic, it * st + dt,
                                                                 ih * sh + dh, iw * sw + dw]
                        for iw in range(wo):
                            y[ib, io, it, ih, iw] = <float> acc[iw]
    return y_arr


def conv3d_backward_input(gy, w, in_shape, stride, padding):
    cdef int st = stride[0], sh = stride[1], sw = stride[2]
    cdef int pt = padding[0], ph = padding[1], pw = padding[2]
    cdef Py_ssize_t t = in_shape[2], h = in_shape[3], wd = in_shape[4]

    gy_arr = np.ascontiguousarray(gy, dtype=np.float32)
    w_arr = np.ascontiguousarray(w, dtype=np.float32)
    cdef float[:, :, :, :, ::1] g = gy_arr
    cdef float[:, :, :, :, ::1] wv = w_arr

    cdef Py_ssize_t b = g.shape[0], co = g.shape[1]
    cdef Py_ssize_t to = g.shape[2], ho = g.shape[3], wo = g.shape[4]
    cdef Py_ssize_t ci = wv.shape[1], kt = wv.shape[2], kh = wv.shape[3], kw = wv.shape[4]

    # Accumulate in padded coordinates (indices never leave the buffer),
    # crop the padding off at the end.
    gxp_arr = np.zeros((b, ci, t + 2 * pt, h + 2 * ph, wd + 2 * pw), dtype=np.float64)
    cdef double[:, :, :, :, ::1] gxp = gxp_arr

    cdef Py_ssize_t ib, ic, io, it, ih, iw, dt, dh, dw, rt, rh, base
    cdef double gval
    with nogil:
        for ib in range(b):
            for io in range(co):
                for it in range(to):
                    for ih in range(ho):
                        for ic in range(ci):
                            for dt in range(kt):
                                rt = it * st + dt
                                for dh in range(kh):
                                    rh = ih * sh + dh
                                    for iw in range(wo):
                                        gval = g[ib, io, it, ih, iw]
                                        base = iw * sw
                                        for dw in range(kw):
                                            gxp[ib, ic, rt, rh, base + dw] += \
                                                gval * wv[io, ic, dt, dh, dw]
    gx = gxp_arr[:, :, pt:pt + t, ph:ph + h, pw:pw + wd]
    return np.ascontiguousarray(gx, dtype=np.float32)


def conv3d_backward_kernel(gy, x, kernel_shape, stride, padding):
    cdef int st = stride[0], sh = stride[1], sw = stride[2]
    cdef int pt = padding[0], ph = padding[1], pw = padding[2]

    gy_arr = np.ascontiguousarray(gy, dtype=np.float32)
    xp_arr = _padded(x, pt, ph, pw)
    cdef float[:, :, :, :, ::1] g = gy_arr
    cdef float[:, :, :, :, ::1] xp = xp_arr

    cdef Py_ssize_t b = g.shape[0], co = g.shape[1]
    cdef Py_ssize_t to = g.shape[2], ho = g.shape[3], wo = g.shape[4]
    cdef Py_ssize_t ci = xp.shape[1]
    cdef Py_ssize_t kt = kernel_shape[2], kh = kernel_shape[3], kw = kernel_shape[4]

    gw_arr = np.zeros((co, ci, kt, kh, kw), dtype=np.float64)
    cdef double[:, :, :, :, ::1] gw = gw_arr

    cdef Py_ssize_t ib, ic, io, it, ih, iw, dt, dh, dw, rt, rh, base
    cdef double gval
    with nogil:
        for ib in range(b):
            for io in range(co):
                for it in range(to):
                    for ih in range(ho):
                        for ic in range(ci):
                            for dt in range(kt):
                                rt = it * st + dt
                                for dh in range(kh):
                                    rh = ih * sh + dh
                                    for iw in range(wo):
                                        gval = g[ib, io, it, ih, iw]
                                        base = iw * sw
                                        for dw in range(kw):
                                            gw[io, ic, dt, dh, dw] += \
                                                gval * xp[ib, ic, rt, rh, base + dw]
    return gw_arr.astype(np.float32)
