"""Pure-numpy reference implementations of the hot kernels.

Used as the fallback backend when the compiled extension is unavailable
(or when ROADFP_BACKEND=python). Convolutions go through im2col so the
heavy lifting stays inside BLAS; the compiled backend uses direct loops.
Both backends must agree to float tolerance — see tests/test_kernels.py.
"""

import numpy as np


def _im2col(x, kh, kw, stride, pad):
    """x: (C, H, W) -> cols (C*kh*kw, Ho*Wo), plus padded buffer shape."""
    c, h, w = x.shape
    xp = np.pad(x, ((0, 0), (pad, pad), (pad, pad)))
    ho = (h + 2 * pad - kh) // stride + 1
    wo = (w + 2 * pad - kw) // stride + 1
    s0, s1, s2 = xp.strides
    windows = np.lib.stride_tricks.as_strided(
        xp,
        shape=(c, kh, kw, ho, wo),
        strides=(s0, s1, s2, s1 * stride, s2 * stride),
        writeable=False,
    )
    return windows.reshape(c * kh * kw, ho * wo).copy(), xp.shape, (ho, wo)


def conv2d_forward(x, w, b, stride, pad):
    """2-D cross-correlation. x (Cin,H,W), w (Cout,Cin,kh,kw), b (Cout,)."""
    cout, cin, kh, kw = w.shape
    cols, _, (ho, wo) = _im2col(x, kh, kw, stride, pad)
    out = w.reshape(cout, -1) @ cols + b[:, None]
    return np.ascontiguousarray(out.reshape(cout, ho, wo))


def conv2d_backward_input(w, dout, x_shape, stride, pad):
    """Gradient of conv2d_forward w.r.t. x."""
    cout, cin, kh, kw = w.shape
    c, h, w_in = x_shape
    ho, wo = dout.shape[1], dout.shape[2]
    dcols = w.reshape(cout, -1).T @ dout.reshape(cout, -1)
    dcols = dcols.reshape(cin, kh, kw, ho, wo)

    dxp = np.zeros((c, h + 2 * pad, w_in + 2 * pad), dtype=dout.dtype)
    oh = np.arange(ho) * stride
    ow = np.arange(wo) * stride
    for i in range(kh):
        for j in range(kw):
            # scatter-add each kernel tap's contribution onto the padded grid
            np.add.at(dxp, (slice(None), oh[:, None] + i, ow[None, :] + j),
                      dcols[:, i, j])
    if pad:
        return np.ascontiguousarray(dxp[:, pad:-pad, pad:-pad])
    return dxp


def conv2d_backward_params(x, dout, w_shape, stride, pad):
    """Gradients of conv2d_forward w.r.t. w and b."""
    cout, cin, kh, kw = w_shape
    cols, _, _ = _im2col(x, kh, kw, stride, pad)
    dw = (dout.reshape(cout, -1) @ cols.T).reshape(w_shape)
    db = dout.reshape(cout, -1).sum(axis=1)
    return dw, db


def maxpool2_forward(x):
    """2x2 stride-2 max pooling; also returns flat argmax indices for backward."""
    c, h, w = x.shape
    ho, wo = h // 2, w // 2
    xv = x[:, : ho * 2, : wo * 2].reshape(c, ho, 2, wo, 2)
    win = xv.transpose(0, 1, 3, 2, 4).reshape(c, ho, wo, 4)
    k = win.argmax(axis=3)
    out = np.take_along_axis(win, k[..., None], axis=3)[..., 0]
    rows = (np.arange(ho)[None, :, None] * 2 + k // 2)
    colx = (np.arange(wo)[None, None, :] * 2 + k % 2)
    idx = (rows * w + colx).astype(np.int64)
    return np.ascontiguousarray(out), np.ascontiguousarray(idx)


def maxpool2_backward(dout, idx, x_shape):
    c, h, w = x_shape
    dx = np.zeros((c, h * w), dtype=dout.dtype)
    ci = np.repeat(np.arange(c), idx[0].size)
    np.add.at(dx, (ci, idx.reshape(c, -1).ravel()), dout.reshape(c, -1).ravel())
    return dx.reshape(x_shape)


# Track segment descriptors are packed 8-float rows:
#   line: [0, ax, ay, ux, uy, length, s0, 0]
#   arc:  [1, cx, cy, radius, a0, sweep, s0, 0]
# where s0 is the arclength at the segment start and sweep is signed radians.
SEG_LINE = 0.0
SEG_ARC = 1.0


def _line_dist(pts, seg):
    ax, ay, ux, uy, length, s0 = seg[1:7]
    wx = pts[:, 0] - ax
    wy = pts[:, 1] - ay
    t = np.clip(wx * ux + wy * uy, 0.0, length)
    fx = ax + t * ux
    fy = ay + t * uy
    dx = pts[:, 0] - fx
    dy = pts[:, 1] - fy
    dist = np.hypot(dx, dy)
    side = np.sign(ux * dy - uy * dx)
    side[side == 0] = 1.0
    return side * dist, s0 + t


def _arc_dist(pts, seg):
    cx, cy, radius, a0, sweep, s0 = seg[1:7]
    vx = pts[:, 0] - cx
    vy = pts[:, 1] - cy
    r = np.hypot(vx, vy)
    phi = np.arctan2(vy, vx)
    span = abs(sweep)
    sgn = 1.0 if sweep >= 0 else -1.0
    delta = np.mod(sgn * (phi - a0), 2.0 * np.pi)
    inside = delta <= span
    # outside the angular span: snap to whichever endpoint is angularly closer
    t = np.where(inside, delta,
                 np.where(delta - span < 2.0 * np.pi - delta, span, 0.0))
    a = a0 + sgn * t
    fx = cx + radius * np.cos(a)
    fy = cy + radius * np.sin(a)
    dx = pts[:, 0] - fx
    dy = pts[:, 1] - fy
    dist = np.hypot(dx, dy)
    # radial side convention; matches the tangent cross product on the arc
    # interior and continues it smoothly past the endpoints
    side = np.sign(-sgn * (r - radius))
    side = np.where(side == 0, 1.0, side)
    return side * dist, s0 + radius * t


def track_distance(pts, segs):
    """Signed distance to, and arclength along, the nearest centerline point.

    pts (N,2) float64; segs (S,8) packed rows. Sign is positive to the left
    of the direction of travel (standard CCW plane orientation). Ties go to
    the earlier segment.
    """
    pts = np.asarray(pts, dtype=np.float64)
    n = pts.shape[0]
    best_abs = np.full(n, np.inf)
    best_d = np.zeros(n)
    best_s = np.zeros(n)
    for seg in segs:
        if seg[0] == SEG_LINE:
            d, s = _line_dist(pts, seg)
        else:
            d, s = _arc_dist(pts, seg)
        take = np.abs(d) < best_abs
        best_abs[take] = np.abs(d[take])
        best_d[take] = d[take]
        best_s[take] = s[take]
    return best_d, best_s
