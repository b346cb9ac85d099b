# Compiled implementations of the hot kernels: direct-loop convolutions,
# 2x2 max pooling, and per-point track distance. API mirrors pyref.py.

import numpy as np

cimport cython
cimport numpy as cnp
from libc.math cimport atan2, cos, fabs, fmod, hypot, sin

ctypedef fused floating:
    float
    double

cdef double TWO_PI = 6.283185307179586476925287


def conv2d_forward(floating[:, :, ::1] x, floating[:, :, :, ::1] w,
                   floating[::1] b, int stride, int pad):
    cdef Py_ssize_t cin = x.shape[0], h = x.shape[1], win = x.shape[2]
    cdef Py_ssize_t cout = w.shape[0], kh = w.shape[2], kw = w.shape[3]
    cdef Py_ssize_t ho = (h + 2 * pad - kh) // stride + 1
    cdef Py_ssize_t wo = (win + 2 * pad - kw) // stride + 1
    if floating is float:
        out_np = np.empty((cout, ho, wo), dtype=np.float32)
    else:
        out_np = np.empty((cout, ho, wo), dtype=np.float64)
    cdef floating[:, :, ::1] out = out_np
    cdef Py_ssize_t co, ci, i, j, oi, oj, ii, jj
    cdef floating acc, wv
    with nogil:
        for co in range(cout):
            for oi in range(ho):
                for oj in range(wo):
                    out[co, oi, oj] = b[co]
            for ci in range(cin):
                for i in range(kh):
                    for j in range(kw):
                        wv = w[co, ci, i, j]
                        if wv == 0:
                            continue
                        for oi in range(ho):
                            ii = oi * stride + i - pad
                            if ii < 0 or ii >= h:
                                continue
                            for oj in range(wo):
                                jj = oj * stride + j - pad
                                if jj < 0 or jj >= win:
                                    continue
                                out[co, oi, oj] += wv * x[ci, ii, jj]
    return out_np


def conv2d_backward_input(floating[:, :, :, ::1] w, floating[:, :, ::1] dout,
                          x_shape, int stride, int pad):
    cdef Py_ssize_t cin = x_shape[0], h = x_shape[1], win = x_shape[2]
    cdef Py_ssize_t cout = w.shape[0], kh = w.shape[2], kw = w.shape[3]
    cdef Py_ssize_t ho = dout.shape[1], wo = dout.shape[2]
    if floating is float:
        dx_np = np.zeros((cin, h, win), dtype=np.float32)
    else:
        dx_np = np.zeros((cin, h, win), dtype=np.float64)
    cdef floating[:, :, ::1] dx = dx_np
    cdef Py_ssize_t co, ci, i, j, oi, oj, ii, jj
    cdef floating wv
    with nogil:
        for co in range(cout):
            for ci in range(cin):
                for i in range(kh):
                    for j in range(kw):
                        wv = w[co, ci, i, j]
                        if wv == 0:
                            continue
                        for oi in range(ho):
                            ii = oi * stride + i - pad
                            if ii < 0 or ii >= h:
                                continue
                            for oj in range(wo):
                                jj = oj * stride + j - pad
                                if jj < 0 or jj >= win:
                                    continue
                                dx[ci, ii, jj] += wv * dout[co, oi, oj]
    return dx_np


def conv2d_backward_params(floating[:, :, ::1] x, floating[:, :, ::1] dout,
                           w_shape, int stride, int pad):
    cdef Py_ssize_t cout = w_shape[0], cin = w_shape[1]
    cdef Py_ssize_t kh = w_shape[2], kw = w_shape[3]
    cdef Py_ssize_t h = x.shape[1], win = x.shape[2]
    cdef Py_ssize_t ho = dout.shape[1], wo = dout.shape[2]
    if floating is float:
        dw_np = np.zeros((cout, cin, kh, kw), dtype=np.float32)
        db_np = np.zeros(cout, dtype=np.float32)
    else:
        dw_np = np.zeros((cout, cin, kh, kw), dtype=np.float64)
        db_np = np.zeros(cout, dtype=np.float64)
    cdef floating[:, :, :, ::1] dw = dw_np
    cdef floating[::1] db = db_np
    cdef Py_ssize_t co, ci, i, j, oi, oj, ii, jj
    cdef floating acc
    with nogil:
        for co in range(cout):
            acc = 0
            for oi in range(ho):
                for oj in range(wo):
                    acc += dout[co, oi, oj]
            db[co] = acc
            for ci in range(cin):
                for i in range(kh):
                    for j in range(kw):
                        acc = 0
                        for oi in range(ho):
                            ii = oi * stride + i - pad
                            if ii < 0 or ii >= h:
                                continue
                            for oj in range(wo):
                                jj = oj * stride + j - pad
                                if jj < 0 or jj >= win:
                                    continue
                                acc += x[ci, ii, jj] * dout[co, oi, oj]
                        dw[co, ci, i, j] = acc
    return dw_np, db_np


def maxpool2_forward(floating[:, :, ::1] x):
    cdef Py_ssize_t c = x.shape[0], h = x.shape[1], w = x.shape[2]
    cdef Py_ssize_t ho = h // 2, wo = w // 2
    if floating is float:
        out_np = np.empty((c, ho, wo), dtype=np.float32)
    else:
        out_np = np.empty((c, ho, wo), dtype=np.float64)
    idx_np = np.empty((c, ho, wo), dtype=np.int64)
    cdef floating[:, :, ::1] out = out_np
    cdef cnp.int64_t[:, :, ::1] idx = idx_np
    cdef Py_ssize_t ci, oi, oj, ii, jj, bi, bj
    cdef floating best, v
    with nogil:
        for ci in range(c):
            for oi in range(ho):
                for oj in range(wo):
                    bi = oi * 2
                    bj = oj * 2
                    best = x[ci, bi, bj]
                    ii = bi
                    jj = bj
                    if x[ci, bi, bj + 1] > best:
                        best = x[ci, bi, bj + 1]
                        jj = bj + 1
                    if x[ci, bi + 1, bj] > best:
                        best = x[ci, bi + 1, bj]
                        ii = bi + 1
                        jj = bj
                    if x[ci, bi + 1, bj + 1] > best:
                        best = x[ci, bi + 1, bj + 1]
                        ii = bi + 1
                        jj = bj + 1
                    out[ci, oi, oj] = best
                    idx[ci, oi, oj] = ii * w + jj
    return out_np, idx_np


def maxpool2_backward(floating[:, :, ::1] dout, cnp.int64_t[:, :, ::1] idx,
                      x_shape):
    cdef Py_ssize_t c = x_shape[0], h = x_shape[1], w = x_shape[2]
    cdef Py_ssize_t ho = dout.shape[1], wo = dout.shape[2]
    if floating is float:
        dx_np = np.zeros((c, h, w), dtype=np.float32)
    else:
        dx_np = np.zeros((c, h, w), dtype=np.float64)
    cdef floating[:, :, ::1] dx = dx_np
    cdef Py_ssize_t ci, oi, oj, flat
    with nogil:
        for ci in range(c):
            for oi in range(ho):
                for oj in range(wo):
                    flat = idx[ci, oi, oj]
                    dx[ci, flat // w, flat % w] += dout[ci, oi, oj]
    return dx_np


def track_distance(double[:, ::1] pts, double[:, ::1] segs):
    cdef Py_ssize_t n = pts.shape[0], ns = segs.shape[0]
    d_np = np.empty(n, dtype=np.float64)
    s_np = np.empty(n, dtype=np.float64)
    cdef double[::1] dv = d_np
    cdef double[::1] sv = s_np
    cdef Py_ssize_t k, m
    cdef double px, py, best_abs, best_d, best_s
    cdef double ax, ay, ux, uy, length, s0, t, fx, fy, ddx, ddy, dist, side
    cdef double cx, cy, radius, a0, sweep, vx, vy, r, phi, span, sgn, delta, a
    with nogil:
        for k in range(n):
            px = pts[k, 0]
            py = pts[k, 1]
            best_abs = 1e300
            best_d = 0
            best_s = 0
            for m in range(ns):
                if segs[m, 0] == 0.0:
                    ax = segs[m, 1]
                    ay = segs[m, 2]
                    ux = segs[m, 3]
                    uy = segs[m, 4]
                    length = segs[m, 5]
                    s0 = segs[m, 6]
                    t = (px - ax) * ux + (py - ay) * uy
                    if t < 0:
                        t = 0
                    elif t > length:
                        t = length
                    fx = ax + t * ux
                    fy = ay + t * uy
                    ddx = px - fx
                    ddy = py - fy
                    dist = hypot(ddx, ddy)
                    side = ux * ddy - uy * ddx
                    if side < 0:
                        dist = -dist
                    t = s0 + t
                else:
                    cx = segs[m, 1]
                    cy = segs[m, 2]
                    radius = segs[m, 3]
                    a0 = segs[m, 4]
                    sweep = segs[m, 5]
                    s0 = segs[m, 6]
                    vx = px - cx
                    vy = py - cy
                    r = hypot(vx, vy)
                    phi = atan2(vy, vx)
                    span = fabs(sweep)
                    sgn = 1.0 if sweep >= 0 else -1.0
                    delta = fmod(sgn * (phi - a0), TWO_PI)
                    if delta < 0:
                        delta += TWO_PI
                    if delta > span:
                        if delta - span < TWO_PI - delta:
                            delta = span
                        else:
                            delta = 0.0
                    a = a0 + sgn * delta
                    fx = cx + radius * cos(a)
                    fy = cy + radius * sin(a)
                    ddx = px - fx
                    ddy = py - fy
                    dist = hypot(ddx, ddy)
                    if -sgn * (r - radius) < 0:
                        dist = -dist
                    t = s0 + radius * delta
                if fabs(dist) < best_abs:
                    best_abs = fabs(dist)
                    best_d = dist
                    best_s = t
            dv[k] = best_d
            sv[k] = best_s
    return d_np, s_np
