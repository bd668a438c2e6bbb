"""Differentiable primitives.

Each function takes Values (or raw arrays, wrapped as constant leaves) and
returns a Value whose backward rule accumulates into its parents. Shapes
must match exactly; the only broadcasting allowed is a python scalar
against a tensor, which keeps every backward rule auditable.
"""

import numpy as np

from .autodiff import ShapeError, Value, make_leaf, record
from .. import kernels


def as_value(x):
    if isinstance(x, Value):
        return x
    return make_leaf(x)


def _check_same_shape(op, a, b):
    if a.shape != b.shape:
        raise ShapeError(f"{op}: operand shapes {a.shape} and {b.shape} differ")


def _is_scalar(x):
    return isinstance(x, (int, float, np.floating, np.integer))


# ---------------------------------------------------------------------------
# elementwise arithmetic


def add(a, b):
    if _is_scalar(b):
        a = as_value(a)

        def bwd(g, a=a):
            a.accumulate_grad(g)

        return record(a.data + a.data.dtype.type(b), "add", (a,), bwd)
    if _is_scalar(a):
        return add(b, a)
    a, b = as_value(a), as_value(b)
    _check_same_shape("add", a, b)

    def bwd(g, a=a, b=b):
        a.accumulate_grad(g)
        b.accumulate_grad(g)

    return record(a.data + b.data, "add", (a, b), bwd)


def sub(a, b):
    if _is_scalar(b):
        return add(a, -b)
    if _is_scalar(a):
        return add(neg(b), a)
    a, b = as_value(a), as_value(b)
    _check_same_shape("sub", a, b)

    def bwd(g, a=a, b=b):
        a.accumulate_grad(g)
        b.accumulate_grad(-g)

    return record(a.data - b.data, "sub", (a, b), bwd)


def neg(a):
    a = as_value(a)

    def bwd(g, a=a):
        a.accumulate_grad(-g)

    return record(-a.data, "neg", (a,), bwd)


def mul(a, b):
    if _is_scalar(b):
        a = as_value(a)
        c = a.data.dtype.type(b)

        def bwd(g, a=a, c=c):
            a.accumulate_grad(g * c)

        return record(a.data * c, "mul", (a,), bwd)
    if _is_scalar(a):
        return mul(b, a)
    a, b = as_value(a), as_value(b)
    _check_same_shape("mul", a, b)

    def bwd(g, a=a, b=b):
        a.accumulate_grad(g * b.data)
        b.accumulate_grad(g * a.data)

    return record(a.data * b.data, "mul", (a, b), bwd)


def div(a, b):
    if _is_scalar(b):
        return mul(a, 1.0 / b)
    a, b = as_value(a), as_value(b)
    _check_same_shape("div", a, b)
    out = a.data / b.data

    def bwd(g, a=a, b=b, out=out):
        a.accumulate_grad(g / b.data)
        b.accumulate_grad(-g * out / b.data)

    return record(out, "div", (a, b), bwd)


# ---------------------------------------------------------------------------
# elementwise nonlinearities


def relu(a):
    a = as_value(a)
    out = np.maximum(a.data, 0)

    def bwd(g, a=a):
        a.accumulate_grad(g * (a.data > 0))

    return record(out, "relu", (a,), bwd)


def abs_(a):
    a = as_value(a)

    def bwd(g, a=a):
        a.accumulate_grad(g * np.sign(a.data))

    return record(np.abs(a.data), "abs", (a,), bwd)


def exp(a):
    a = as_value(a)
    out = np.exp(a.data)

    def bwd(g, a=a, out=out):
        a.accumulate_grad(g * out)

    return record(out, "exp", (a,), bwd)


def log(a):
    a = as_value(a)

    def bwd(g, a=a):
        a.accumulate_grad(g / a.data)

    return record(np.log(a.data), "log", (a,), bwd)


def sigmoid(a):
    a = as_value(a)
    out = 1.0 / (1.0 + np.exp(-a.data))

    def bwd(g, a=a, out=out):
        a.accumulate_grad(g * out * (1.0 - out))

    return record(out, "sigmoid", (a,), bwd)


def softplus(a):
    """log(1 + e^x), computed without overflow for large |x|."""
    a = as_value(a)
    out = np.maximum(a.data, 0) + np.log1p(np.exp(-np.abs(a.data)))

    def bwd(g, a=a):
        a.accumulate_grad(g / (1.0 + np.exp(-a.data)))

    return record(out, "softplus", (a,), bwd)


def pow_const(a, p):
    """a**p for a constant exponent; base must stay positive for fractional p."""
    a = as_value(a)
    out = a.data**p

    def bwd(g, a=a, p=p):
        a.accumulate_grad(g * p * a.data ** (p - 1))

    return record(out, "pow", (a,), bwd)


def clip(a, lo, hi):
    """Clamp to [lo, hi]; gradient is zero where the input was clipped."""
    a = as_value(a)
    out = np.clip(a.data, lo, hi)

    def bwd(g, a=a, lo=lo, hi=hi):
        a.accumulate_grad(g * ((a.data > lo) & (a.data < hi)))

    return record(out, "clip", (a,), bwd)


def huber(a, delta):
    """Smooth-L1 elementwise: 0.5 x^2/delta inside |x|<delta, |x|-delta/2 outside."""
    a = as_value(a)
    ax = np.abs(a.data)
    out = np.where(ax < delta, 0.5 * a.data * a.data / delta, ax - 0.5 * delta)

    def bwd(g, a=a, delta=delta):
        a.accumulate_grad(g * np.clip(a.data / delta, -1.0, 1.0))

    return record(out.astype(a.data.dtype), "huber", (a,), bwd)


# ---------------------------------------------------------------------------
# linear algebra


def matmul(a, b):
    a, b = as_value(a), as_value(b)
    if a.data.ndim != 2 or b.data.ndim != 2 or a.shape[1] != b.shape[0]:
        raise ShapeError(f"matmul: incompatible shapes {a.shape} and {b.shape}")

    def bwd(g, a=a, b=b):
        a.accumulate_grad(g @ b.data.T)
        b.accumulate_grad(a.data.T @ g)

    return record(a.data @ b.data, "matmul", (a, b), bwd)


def add_rowvec(a, b):
    """Add a (C,) bias row to every row of an (N, C) matrix."""
    a, b = as_value(a), as_value(b)
    if a.data.ndim != 2 or b.shape != (a.shape[1],):
        raise ShapeError(f"add_rowvec: shapes {a.shape} and {b.shape} incompatible")

    def bwd(g, a=a, b=b):
        a.accumulate_grad(g)
        b.accumulate_grad(g.sum(axis=0))

    return record(a.data + b.data[None, :], "add_rowvec", (a, b), bwd)


# ---------------------------------------------------------------------------
# convolution and resampling


def conv2d(x, w, b=None, stride=1, pad=0):
    """2D convolution of (Cin, H, W) with (Cout, Cin, kh, kw), stride 1 or 2."""
    x, w = as_value(x), as_value(w)
    if x.data.ndim != 3 or w.data.ndim != 4 or x.shape[0] != w.shape[1]:
        raise ShapeError(f"conv2d: input {x.shape} incompatible with weight {w.shape}")
    cin, h, wdt = x.shape
    cout, _, kh, kw = w.shape
    ho = (h + 2 * pad - kh) // stride + 1
    wo = (wdt + 2 * pad - kw) // stride + 1
    if ho <= 0 or wo <= 0:
        raise ShapeError(f"conv2d: kernel {w.shape} too large for input {x.shape}")
    xp = np.pad(x.data, ((0, 0), (pad, pad), (pad, pad))) if pad else x.data
    cols = kernels.im2col(xp, kh, kw, stride)  # (L, cin*kh*kw)
    wf = w.data.reshape(cout, -1)
    out_mat = wf @ cols.T  # (cout, L), already in output memory order
    if b is not None:
        b = as_value(b)
        if b.shape != (cout,):
            raise ShapeError(f"conv2d: bias {b.shape} does not match {cout} channels")
        out_mat += b.data[:, None]
    parents = (x, w) if b is None else (x, w, b)

    def bwd(g, x=x, w=w, b=b, cols=cols, wf=wf):
        g_mat = g.reshape(cout, ho * wo)
        w.accumulate_grad((g_mat @ cols).reshape(w.shape))
        if b is not None:
            b.accumulate_grad(g_mat.sum(axis=1))
        dcols = np.ascontiguousarray(g_mat.T @ wf)
        dxp = kernels.col2im(dcols, cin, h + 2 * pad, wdt + 2 * pad, kh, kw, stride)
        x.accumulate_grad(dxp[:, pad : pad + h, pad : pad + wdt] if pad else dxp)

    return record(out_mat.reshape(cout, ho, wo), "conv2d", parents, bwd)


def upsample_nearest(x, factor):
    """Nearest-neighbor upsample of (C, H, W) by an integer factor."""
    x = as_value(x)
    if x.data.ndim != 3:
        raise ShapeError(f"upsample_nearest: expected (C, H, W), got {x.shape}")
    f = int(factor)
    c, h, w = x.shape
    out = np.repeat(np.repeat(x.data, f, axis=1), f, axis=2)

    def bwd(g, x=x, f=f, c=c, h=h, w=w):
        x.accumulate_grad(g.reshape(c, h, f, w, f).sum(axis=(2, 4)))

    return record(out, "upsample_nearest", (x,), bwd)


def grid_sample(feat, points):
    """Bilinear samples of a (C, H, W) map at (P, 2) float (col, row) points.

    Points are constant (not differentiated); out-of-bounds taps read zero.
    Returns (P, C).
    """
    feat = as_value(feat)
    if feat.data.ndim != 3:
        raise ShapeError(f"grid_sample: expected (C, H, W) map, got {feat.shape}")
    pts = np.asarray(points, dtype=feat.data.dtype)
    xs = np.ascontiguousarray(pts[:, 0])
    ys = np.ascontiguousarray(pts[:, 1])
    _, h, w = feat.shape
    out = kernels.bilinear_sample(feat.data, xs, ys)

    def bwd(g, feat=feat, xs=xs, ys=ys, h=h, w=w):
        feat.accumulate_grad(kernels.bilinear_sample_grad(np.ascontiguousarray(g), xs, ys, h, w))

    return record(out, "grid_sample", (feat,), bwd)


# ---------------------------------------------------------------------------
# shape manipulation


def reshape(a, shape):
    a = as_value(a)
    out = a.data.reshape(shape)

    def bwd(g, a=a):
        a.accumulate_grad(g.reshape(a.shape))

    return record(out, "reshape", (a,), bwd)


def transpose2d(a):
    a = as_value(a)
    if a.data.ndim != 2:
        raise ShapeError(f"transpose2d: expected a matrix, got {a.shape}")

    def bwd(g, a=a):
        a.accumulate_grad(g.T)

    return record(np.ascontiguousarray(a.data.T), "transpose2d", (a,), bwd)


def concat(values, axis=0):
    values = [as_value(v) for v in values]
    if not values:
        raise ShapeError("concat: need at least one operand")
    ref = list(values[0].shape)
    for v in values[1:]:
        other = list(v.shape)
        if len(other) != len(ref) or any(
            i != axis and other[i] != ref[i] for i in range(len(ref))
        ):
            raise ShapeError(
                f"concat: shape {v.shape} incompatible with {values[0].shape} on axis {axis}"
            )
    sizes = [v.shape[axis] for v in values]
    splits = np.cumsum(sizes)[:-1]

    def bwd(g, values=values, splits=splits, axis=axis):
        for v, piece in zip(values, np.split(g, splits, axis=axis)):
            v.accumulate_grad(piece)

    return record(np.concatenate([v.data for v in values], axis=axis), "concat", tuple(values), bwd)


def narrow(a, axis, start, length):
    """Contiguous slice [start, start+length) along one axis."""
    a = as_value(a)
    if not (0 <= start and start + length <= a.shape[axis]):
        raise ShapeError(f"narrow: [{start}, {start + length}) outside axis {axis} of {a.shape}")
    index = [slice(None)] * a.data.ndim
    index[axis] = slice(start, start + length)
    index = tuple(index)

    def bwd(g, a=a, index=index):
        full = np.zeros(a.shape, dtype=g.dtype)
        full[index] = g
        a.accumulate_grad(full)

    return record(np.ascontiguousarray(a.data[index]), "narrow", (a,), bwd)


# ---------------------------------------------------------------------------
# gather / scatter


def gather_rows(a, idx):
    """Select rows of an (N, C) matrix by an integer index list (repeats allowed)."""
    a = as_value(a)
    idx = np.ascontiguousarray(idx, dtype=np.int64)
    if a.data.ndim != 2:
        raise ShapeError(f"gather_rows: expected a matrix, got {a.shape}")

    def bwd(g, a=a, idx=idx):
        a.accumulate_grad(kernels.scatter_add_rows(np.ascontiguousarray(g), idx, a.shape[0]))

    return record(a.data[idx], "gather_rows", (a,), bwd)


def scatter_add_rows(vals, idx, nrows):
    """Sum rows of (P, C) vals into an (nrows, C) output at positions idx."""
    vals = as_value(vals)
    idx = np.ascontiguousarray(idx, dtype=np.int64)
    if vals.data.ndim != 2 or idx.ndim != 1 or idx.shape[0] != vals.shape[0]:
        raise ShapeError(f"scatter_add_rows: vals {vals.shape} incompatible with idx {idx.shape}")
    out = kernels.scatter_add_rows(np.ascontiguousarray(vals.data), idx, nrows)

    def bwd(g, vals=vals, idx=idx):
        vals.accumulate_grad(g[idx])

    return record(out, "scatter_add_rows", (vals,), bwd)


# ---------------------------------------------------------------------------
# reductions and normalizations


def sum_(a, axis=None):
    a = as_value(a)
    out = a.data.sum(axis=axis)

    def bwd(g, a=a, axis=axis):
        if axis is None:
            a.accumulate_grad(np.broadcast_to(g, a.shape))
        else:
            a.accumulate_grad(np.broadcast_to(np.expand_dims(g, axis), a.shape))

    return record(out, "sum", (a,), bwd)


def mean(a, axis=None):
    a = as_value(a)
    n = a.size if axis is None else a.shape[axis]
    if n == 0:
        raise ShapeError("mean: reduction over zero elements")
    return mul(sum_(a, axis=axis), 1.0 / n)


def softmax(a, axis=-1):
    a = as_value(a)
    shifted = a.data - a.data.max(axis=axis, keepdims=True)
    e = np.exp(shifted)
    out = e / e.sum(axis=axis, keepdims=True)

    def bwd(g, a=a, out=out, axis=axis):
        dot = (g * out).sum(axis=axis, keepdims=True)
        a.accumulate_grad(out * (g - dot))

    return record(out, "softmax", (a,), bwd)


def log_softmax(a, axis=-1):
    a = as_value(a)
    shifted = a.data - a.data.max(axis=axis, keepdims=True)
    lse = np.log(np.exp(shifted).sum(axis=axis, keepdims=True))
    out = shifted - lse

    def bwd(g, a=a, out=out, axis=axis):
        a.accumulate_grad(g - np.exp(out) * g.sum(axis=axis, keepdims=True))

    return record(out, "log_softmax", (a,), bwd)


def stack_scalars(values):
    """Concatenate scalar Values into a 1-D vector (for averaging loss terms)."""
    return concat([reshape(v, (1,)) for v in values], axis=0)


# operator sugar -------------------------------------------------------------

Value.__add__ = lambda self, other: add(self, other)
Value.__radd__ = lambda self, other: add(self, other)
Value.__sub__ = lambda self, other: sub(self, other)
Value.__rsub__ = lambda self, other: sub(other, self)
Value.__mul__ = lambda self, other: mul(self, other)
Value.__rmul__ = lambda self, other: mul(self, other)
Value.__truediv__ = lambda self, other: div(self, other)
Value.__neg__ = lambda self: neg(self)
