"""Adam optimizer with persistent moment state."""

import numpy as np


class Adam:
    def __init__(self, named_params, lr=0.0004, betas=(0.9, 0.999), eps=1e-8):
        self.named_params = list(named_params)
        self.lr = lr
        self.beta1, self.beta2 = betas
        self.eps = eps
        self.step_count = 0
        self._m = {name: np.zeros_like(p.data) for name, p in self.named_params}
        self._v = {name: np.zeros_like(p.data) for name, p in self.named_params}

    def step(self):
        """One in-place update; grads must be populated on every parameter."""
        self.step_count += 1
        t = self.step_count
        bc1 = 1.0 - self.beta1**t
        bc2 = 1.0 - self.beta2**t
        for name, p in self.named_params:
            if p.grad is None:
                raise RuntimeError(f"Adam: parameter {name!r} has no gradient")
            g = p.grad
            m = self._m[name]
            v = self._v[name]
            m *= self.beta1
            m += (1.0 - self.beta1) * g
            v *= self.beta2
            v += (1.0 - self.beta2) * g * g
            p.data -= (self.lr / bc1) * m / (np.sqrt(v / bc2) + self.eps)

    def zero_grad(self):
        for _, p in self.named_params:
            p.zero_grad()

    def state_tensors(self):
        """Moment state as named float arrays, for checkpoint embedding."""
        out = {}
        for name, _ in self.named_params:
            out[f"m/{name}"] = self._m[name]
            out[f"v/{name}"] = self._v[name]
        out["step"] = np.array([float(self.step_count)])
        return out

    def load_state_tensors(self, state):
        self.step_count = int(round(float(np.asarray(state["step"]).ravel()[0])))
        for name, p in self.named_params:
            self._m[name] = np.asarray(state[f"m/{name}"], dtype=p.data.dtype).reshape(p.data.shape)
            self._v[name] = np.asarray(state[f"v/{name}"], dtype=p.data.dtype).reshape(p.data.shape)
