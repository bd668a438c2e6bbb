# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled twins of the fallback kernels.

Semantics, including floating-point accumulation order, match
``fallback.py`` exactly so the two backends are interchangeable
bit-for-bit; see the parity tests.
"""

import numpy as np

cimport cython
from libc.math cimport floor as c_floor, isfinite

ctypedef fused floating:
    float
    double


def im2col(floating[:, :, ::1] x, Py_ssize_t kh, Py_ssize_t kw, Py_ssize_t stride):
    cdef Py_ssize_t c = x.shape[0], hp = x.shape[1], wp = x.shape[2]
    cdef Py_ssize_t ho = (hp - kh) // stride + 1
    cdef Py_ssize_t wo = (wp - kw) // stride + 1
    if floating is float:
        dtype = np.float32
    else:
        dtype = np.float64
    out_arr = np.empty((ho * wo, c * kh * kw), dtype=dtype)
    cdef floating[:, ::1] out = out_arr
    cdef Py_ssize_t ci, i, j, oy, ox, col, row, ybase
    # output rows written sequentially; inner j reads are contiguous in x
    for oy in range(ho):
        for ox in range(wo):
            row = oy * wo + ox
            col = 0
            for ci in range(c):
                for i in range(kh):
                    ybase = oy * stride + i
                    for j in range(kw):
                        out[row, col] = x[ci, ybase, ox * stride + j]
                        col += 1
    return out_arr


def col2im(floating[:, ::1] cols, Py_ssize_t c, Py_ssize_t hp, Py_ssize_t wp,
           Py_ssize_t kh, Py_ssize_t kw, Py_ssize_t stride):
    cdef Py_ssize_t ho = (hp - kh) // stride + 1
    cdef Py_ssize_t wo = (wp - kw) // stride + 1
    if floating is float:
        dtype = np.float32
    else:
        dtype = np.float64
    out_arr = np.zeros((c, hp, wp), dtype=dtype)
    cdef floating[:, :, ::1] out = out_arr
    # transposing once makes the per-column reads contiguous while keeping
    # the (i, j)-major accumulation order of the fallback
    colsT_arr = np.ascontiguousarray(np.asarray(cols).T)
    cdef floating[:, ::1] colsT = colsT_arr
    cdef Py_ssize_t ci, i, j, oy, ox, col, ybase, rowbase
    for i in range(kh):
        for j in range(kw):
            for ci in range(c):
                col = ci * kh * kw + i * kw + j
                for oy in range(ho):
                    ybase = oy * stride + i
                    rowbase = oy * wo
                    for ox in range(wo):
                        out[ci, ybase, ox * stride + j] += colsT[col, rowbase + ox]
    return out_arr


def scatter_add_rows(floating[:, ::1] vals, long[::1] idx, Py_ssize_t nrows):
    cdef Py_ssize_t p = vals.shape[0], c = vals.shape[1]
    if floating is float:
        dtype = np.float32
    else:
        dtype = np.float64
    out_arr = np.zeros((nrows, c), dtype=dtype)
    cdef floating[:, ::1] out = out_arr
    cdef Py_ssize_t i, j, r
    for i in range(p):
        r = idx[i]
        for j in range(c):
            out[r, j] += vals[i, j]
    return out_arr


def bilinear_sample(floating[:, :, ::1] feat, floating[::1] xs, floating[::1] ys):
    cdef Py_ssize_t c = feat.shape[0], h = feat.shape[1], w = feat.shape[2]
    cdef Py_ssize_t n = xs.shape[0]
    if floating is float:
        dtype = np.float32
    else:
        dtype = np.float64
    out_arr = np.zeros((n, c), dtype=dtype)
    cdef floating[:, ::1] out = out_arr
    cdef Py_ssize_t p, ch, x0, y0, xx, yy, dy, dx
    cdef floating fx, fy, wgt
    for p in range(n):
        x0 = <Py_ssize_t>c_floor(xs[p])
        y0 = <Py_ssize_t>c_floor(ys[p])
        fx = xs[p] - x0
        fy = ys[p] - y0
        for dy in range(2):
            for dx in range(2):
                yy = y0 + dy
                xx = x0 + dx
                if 0 <= yy < h and 0 <= xx < w:
                    wgt = (fy if dy else 1 - fy) * (fx if dx else 1 - fx)
                    for ch in range(c):
                        out[p, ch] += wgt * feat[ch, yy, xx]
    return out_arr


def bilinear_sample_grad(floating[:, ::1] gout, floating[::1] xs, floating[::1] ys,
                         Py_ssize_t h, Py_ssize_t w):
    cdef Py_ssize_t n = gout.shape[0], c = gout.shape[1]
    if floating is float:
        dtype = np.float32
    else:
        dtype = np.float64
    out_arr = np.zeros((c, h, w), dtype=dtype)
    cdef floating[:, :, ::1] out = out_arr
    cdef Py_ssize_t p, ch, x0, y0, xx, yy, dy, dx
    cdef floating fx, fy, wgt
    # corner-major passes match the fallback's np.add.at call order
    for dy in range(2):
        for dx in range(2):
            for p in range(n):
                x0 = <Py_ssize_t>c_floor(xs[p])
                y0 = <Py_ssize_t>c_floor(ys[p])
                yy = y0 + dy
                xx = x0 + dx
                if 0 <= yy < h and 0 <= xx < w:
                    fx = xs[p] - x0
                    fy = ys[p] - y0
                    wgt = (fy if dy else 1 - fy) * (fx if dx else 1 - fx)
                    for ch in range(c):
                        out[ch, yy, xx] += wgt * gout[p, ch]
    return out_arr


def nearest_points(floating[:, ::1] points, floating[:, ::1] centers,
                   Py_ssize_t k, double radius):
    cdef Py_ssize_t n = centers.shape[0], p = points.shape[0]
    out_arr = np.full((n, k), -1, dtype=np.int64)
    cdef long[:, ::1] out = out_arr
    if p == 0:
        return out_arr
    cdef bint bounded = isfinite(radius)
    cdef double r2 = radius * radius if bounded else -1.0
    best_d_arr = np.empty(k, dtype=np.float64)
    best_i_arr = np.empty(k, dtype=np.int64)
    cdef double[::1] best_d = best_d_arr
    cdef long[::1] best_i = best_i_arr
    cdef Py_ssize_t ci, pi, filled, pos, shift
    cdef double dx, dy, d2
    for ci in range(n):
        filled = 0
        for pi in range(p):
            dx = points[pi, 0] - centers[ci, 0]
            dy = points[pi, 1] - centers[ci, 1]
            d2 = dx * dx + dy * dy
            if bounded and d2 > r2:
                continue
            if filled < k:
                pos = filled
                while pos > 0 and best_d[pos - 1] > d2:
                    best_d[pos] = best_d[pos - 1]
                    best_i[pos] = best_i[pos - 1]
                    pos -= 1
                best_d[pos] = d2
                best_i[pos] = pi
                filled += 1
            elif d2 < best_d[k - 1]:
                pos = k - 1
                while pos > 0 and best_d[pos - 1] > d2:
                    best_d[pos] = best_d[pos - 1]
                    best_i[pos] = best_i[pos - 1]
                    pos -= 1
                best_d[pos] = d2
                best_i[pos] = pi
        for pos in range(filled):
            out[ci, pos] = best_i[pos]
    return out_arr
