"""Value/Tape machinery for reverse-mode automatic differentiation.

A forward pass runs inside a :class:`Tape` context; every operation appends
its output node in execution order, which is by construction a topological
order (operands exist before the op that consumes them). ``backward`` walks
the tape once in reverse. Gradients accumulate on leaves across backward
calls until explicitly cleared.

Outside a tape, operations still compute values but record nothing, which
is the inference path.
"""

import numpy as np

_DEFAULT_DTYPE = np.float64


def set_default_dtype(dtype):
    """Set the floating dtype for newly created leaves (float32 or float64)."""
    global _DEFAULT_DTYPE
    dtype = np.dtype(dtype)
    if dtype not in (np.dtype(np.float32), np.dtype(np.float64)):
        raise ValueError(f"unsupported dtype {dtype}; use float32 or float64")
    _DEFAULT_DTYPE = dtype.type


def get_default_dtype():
    return _DEFAULT_DTYPE


class ShapeError(ValueError):
    """Operand shapes incompatible with the requested operation."""


class Tape:
    """Ordered record of one forward pass."""

    _active = None

    def __init__(self):
        self.nodes = []

    def __enter__(self):
        if Tape._active is not None:
            raise RuntimeError("a tape is already active; tapes do not nest")
        Tape._active = self
        return self

    def __exit__(self, exc_type, exc, tb):
        Tape._active = None
        return False

    @classmethod
    def active(cls):
        return cls._active


class Value:
    """A dense array plus its gradient buffer and backward rule."""

    __slots__ = ("data", "grad", "op", "_parents", "_backward")

    def __init__(self, data, op="leaf", parents=(), backward=None):
        self.data = data
        self.grad = None
        self.op = op
        self._parents = parents
        self._backward = backward

    @property
    def shape(self):
        return self.data.shape

    @property
    def size(self):
        return self.data.size

    def item(self):
        return float(self.data)

    def accumulate_grad(self, g):
        if self.grad is None:
            self.grad = np.array(g, dtype=self.data.dtype, copy=True)
        else:
            self.grad += g

    def zero_grad(self):
        self.grad = None

    def backward(self):
        backward(self)

    def __repr__(self):
        return f"Value(op={self.op!r}, shape={self.shape})"


def make_leaf(data, dtype=None):
    """Wrap raw array data as a constant/input leaf."""
    arr = np.asarray(data, dtype=dtype or _DEFAULT_DTYPE)
    return Value(arr)


def record(data, op, parents, backward_fn):
    """Create an op output node, registering it on the active tape."""
    out = Value(np.asarray(data), op=op, parents=parents)
    tape = Tape.active()
    if tape is not None:
        out._backward = backward_fn
        tape.nodes.append(out)
    return out


def backward(loss, tape=None):
    """Populate dLoss/dX for every node reachable from a scalar loss.

    Walks the recording tape in reverse execution order. Nodes that did not
    receive any upstream gradient (dead branches) are skipped.
    """
    if loss.shape != ():
        raise ShapeError(f"backward requires a scalar loss, got shape {loss.shape}")
    tape = tape if tape is not None else Tape.active()
    if tape is None or not tape.nodes:
        raise RuntimeError("backward called without an active, non-empty tape")
    loss.accumulate_grad(np.ones((), dtype=loss.data.dtype))
    for node in reversed(tape.nodes):
        if node.grad is None or node._backward is None:
            continue
        node._backward(node.grad)
