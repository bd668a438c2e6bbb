"""Pure-numpy implementations of the hot kernels.

These are the reference semantics; the compiled core in ``_core.pyx`` must
match them bit-for-bit (same accumulation order) so either backend can be
swapped in without changing results.
"""

import numpy as np


def im2col(x, kh, kw, stride):
    """Unfold a pre-padded (C, Hp, Wp) array into conv patches.

    Returns (Ho*Wo, C*kh*kw) where the column index is c*kh*kw + i*kw + j,
    matching a weight tensor reshaped to (Cout, Cin*kh*kw).
    """
    c, hp, wp = x.shape
    ho = (hp - kh) // stride + 1
    wo = (wp - kw) // stride + 1
    cols = np.empty((ho * wo, c * kh * kw), dtype=x.dtype)
    for i in range(kh):
        for j in range(kw):
            patch = x[:, i : i + ho * stride : stride, j : j + wo * stride : stride]
            cols[:, i * kw + j :: kh * kw] = patch.reshape(c, ho * wo).T
    return cols


def col2im(cols, c, hp, wp, kh, kw, stride):
    """Adjoint of :func:`im2col`: scatter-add patches back to (C, Hp, Wp)."""
    ho = (hp - kh) // stride + 1
    wo = (wp - kw) // stride + 1
    x = np.zeros((c, hp, wp), dtype=cols.dtype)
    for i in range(kh):
        for j in range(kw):
            patch = cols[:, i * kw + j :: kh * kw].T.reshape(c, ho, wo)
            x[:, i : i + ho * stride : stride, j : j + wo * stride : stride] += patch
    return x


def scatter_add_rows(vals, idx, nrows):
    """Sum rows of vals (P, C) into an (nrows, C) output at positions idx."""
    out = np.zeros((nrows, vals.shape[1]), dtype=vals.dtype)
    np.add.at(out, idx, vals)
    return out


def bilinear_sample(feat, xs, ys):
    """Bilinearly sample (C, H, W) at continuous (col, row) points.

    Points are in cell units where (0, 0) is the center of cell [0, 0].
    Samples falling outside the map contribute zero (each of the four
    corner taps is dropped individually when out of bounds).
    """
    c, h, w = feat.shape
    x0 = np.floor(xs).astype(np.int64)
    y0 = np.floor(ys).astype(np.int64)
    fx = (xs - x0).astype(feat.dtype)
    fy = (ys - y0).astype(feat.dtype)
    out = np.zeros((xs.shape[0], c), dtype=feat.dtype)
    for dy, dx, wgt in (
        (0, 0, (1 - fy) * (1 - fx)),
        (0, 1, (1 - fy) * fx),
        (1, 0, fy * (1 - fx)),
        (1, 1, fy * fx),
    ):
        yy = y0 + dy
        xx = x0 + dx
        ok = (yy >= 0) & (yy < h) & (xx >= 0) & (xx < w)
        if ok.any():
            out[ok] += wgt[ok, None] * feat[:, yy[ok], xx[ok]].T
    return out


def bilinear_sample_grad(gout, xs, ys, h, w):
    """Adjoint of :func:`bilinear_sample`: accumulate (P, C) grads into (C, H, W)."""
    c = gout.shape[1]
    x0 = np.floor(xs).astype(np.int64)
    y0 = np.floor(ys).astype(np.int64)
    fx = (xs - x0).astype(gout.dtype)
    fy = (ys - y0).astype(gout.dtype)
    gfeat = np.zeros((c, h, w), dtype=gout.dtype)
    for dy, dx, wgt in (
        (0, 0, (1 - fy) * (1 - fx)),
        (0, 1, (1 - fy) * fx),
        (1, 0, fy * (1 - fx)),
        (1, 1, fy * fx),
    ):
        yy = y0 + dy
        xx = x0 + dx
        ok = (yy >= 0) & (yy < h) & (xx >= 0) & (xx < w)
        if ok.any():
            np.add.at(gfeat, (slice(None), yy[ok], xx[ok]), (wgt[ok, None] * gout[ok]).T)
    return gfeat


def nearest_points(points, centers, k, radius):
    """K nearest points within radius of each center, ties by lower index.

    Returns (N, K) int64 indices, padded with -1. An infinite radius is
    allowed and disables the distance cut.
    """
    n = centers.shape[0]
    out = np.full((n, k), -1, dtype=np.int64)
    if points.shape[0] == 0:
        return out
    d2 = ((centers[:, None, :] - points[None, :, :]) ** 2).sum(axis=2)
    order = np.argsort(d2, axis=1, kind="stable")[:, :k]
    taken = np.take_along_axis(d2, order, axis=1)
    ok = taken <= radius * radius if np.isfinite(radius) else np.ones_like(taken, bool)
    out[:, : order.shape[1]][ok] = order[ok]
    return out
