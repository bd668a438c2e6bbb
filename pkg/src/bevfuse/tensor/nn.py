"""Parameter containers and the few layer types the network is built from."""

import numpy as np

from . import ops
from .autodiff import Value, get_default_dtype


class Parameter(Value):
    """A learnable leaf. Collected (and named) by Module traversal."""

    __slots__ = ()

    def __init__(self, data):
        super().__init__(np.asarray(data, dtype=get_default_dtype()))


class Module:
    """Minimal composable container: any attribute that is a Parameter,
    Module, or a list/tuple of them is part of the model."""

    def named_parameters(self, prefix=""):
        for key, val in vars(self).items():
            yield from _walk(prefix + key, val)

    def parameters(self):
        return [p for _, p in self.named_parameters()]

    def zero_grad(self):
        for p in self.parameters():
            p.zero_grad()

    def state_dict(self):
        return {name: p.data.copy() for name, p in self.named_parameters()}

    def load_state_dict(self, state):
        own = dict(self.named_parameters())
        missing = sorted(set(own) - set(state))
        extra = sorted(set(state) - set(own))
        if missing or extra:
            raise KeyError(f"state mismatch; missing={missing[:4]} extra={extra[:4]}")
        for name, p in own.items():
            arr = np.asarray(state[name], dtype=p.data.dtype)
            if arr.shape != p.data.shape:
                raise ValueError(f"{name}: shape {arr.shape} != {p.data.shape}")
            p.data = arr.copy()


def _walk(name, val):
    if isinstance(val, Parameter):
        yield name, val
    elif isinstance(val, Module):
        yield from val.named_parameters(name + ".")
    elif isinstance(val, (list, tuple)):
        for i, item in enumerate(val):
            yield from _walk(f"{name}.{i}", item)


def he_normal(rng, shape, fan_in, gain=1.0):
    return rng.normal(0.0, gain * np.sqrt(2.0 / fan_in), size=shape)


class Linear(Module):
    def __init__(self, rng, in_dim, out_dim, bias=True, gain=1.0):
        self.w = Parameter(he_normal(rng, (in_dim, out_dim), in_dim, gain))
        self.b = Parameter(np.zeros(out_dim)) if bias else None

    def __call__(self, x):
        y = ops.matmul(x, self.w)
        return ops.add_rowvec(y, self.b) if self.b is not None else y


class Conv2d(Module):
    def __init__(self, rng, cin, cout, k=3, stride=1, pad=None, bias=True, gain=1.0):
        self.stride = stride
        self.pad = k // 2 if pad is None else pad
        self.w = Parameter(he_normal(rng, (cout, cin, k, k), cin * k * k, gain))
        self.b = Parameter(np.zeros(cout)) if bias else None

    def __call__(self, x):
        return ops.conv2d(x, self.w, self.b, stride=self.stride, pad=self.pad)


class MLP(Module):
    """Plain fully-connected stack, ReLU between layers, linear output."""

    def __init__(self, rng, dims, out_gain=1.0):
        self.layers = [
            Linear(rng, dims[i], dims[i + 1], gain=out_gain if i == len(dims) - 2 else 1.0)
            for i in range(len(dims) - 1)
        ]

    def __call__(self, x):
        for i, layer in enumerate(self.layers):
            x = layer(x)
            if i < len(self.layers) - 1:
                x = ops.relu(x)
        return x
