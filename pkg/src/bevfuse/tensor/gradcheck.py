"""Finite-difference gradient verification (64-bit only).

Relative error is |analytic - numeric| / max(|analytic|, |numeric|, 1), so
well-scaled test problems (gradients of order one) are compared at the
stated relative tolerance while exact zeros agree trivially.
"""

import numpy as np

from .autodiff import Tape, backward


def numeric_grad(forward, leaf, index, eps=1e-5):
    """Central difference of a scalar-valued forward() w.r.t. one component."""
    orig = leaf.data[index]
    leaf.data[index] = orig + eps
    hi = forward().item()
    leaf.data[index] = orig - eps
    lo = forward().item()
    leaf.data[index] = orig
    return (hi - lo) / (2.0 * eps)


def check_gradients(forward, leaves, eps=1e-5, tol=1e-4, max_components=None, rng=None):
    """Compare analytic grads of forward() against central differences.

    forward must rebuild the graph on every call (define-by-run). When
    max_components is set, that many components per leaf are sampled with
    rng instead of checking exhaustively. Returns the worst relative error.
    """
    for leaf in leaves:
        leaf.zero_grad()
    with Tape() as tape:
        loss = forward()
        backward(loss, tape)
    worst = 0.0
    for leaf in leaves:
        analytic = np.zeros_like(leaf.data) if leaf.grad is None else leaf.grad.copy()
        indices = list(np.ndindex(leaf.data.shape))
        if max_components is not None and len(indices) > max_components:
            chosen = rng.choice(len(indices), size=max_components, replace=False)
            indices = [indices[i] for i in chosen]
        for index in indices:
            num = numeric_grad(forward, leaf, index, eps=eps)
            ana = float(analytic[index])
            rel = abs(ana - num) / max(abs(ana), abs(num), 1.0)
            worst = max(worst, rel)
            if rel >= tol:
                raise AssertionError(
                    f"gradient mismatch at {index}: analytic {ana:.8g} vs "
                    f"numeric {num:.8g} (rel {rel:.3g})"
                )
    return worst
