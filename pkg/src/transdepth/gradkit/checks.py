"""Central finite-difference verification of analytic gradients.

Run in 64-bit: float32 round-off drowns the comparison long before any
real gradient bug would.
"""

from __future__ import annotations

import numpy as np


def finite_diff_check(fn, tensors, eps=1e-5, n_samples=None, rng=None):
    """Max relative error between analytic and numeric gradients.

    `fn` is a zero-argument callable returning a scalar Tensor computed
    from `tensors` (leaf tensors with requires_grad=True).  When
    n_samples is given, that many coordinates are checked per tensor
    (uniformly sampled); otherwise every coordinate is checked.
    """
    tensors = list(tensors)
    for t in tensors:
        t.grad = None
    out = fn()
    out.backward()
    analytic = [
        t.grad.copy() if t.grad is not None else np.zeros_like(t.data)
        for t in tensors
    ]
    rng = rng or np.random.default_rng(0)

    max_rel = 0.0
    for t, grad in zip(tensors, analytic):
        flat = t.data.reshape(-1)
        n = flat.size
        if n_samples is not None and n_samples < n:
            idxs = rng.choice(n, size=n_samples, replace=False)
        else:
            idxs = range(n)
        for i in idxs:
            orig = flat[i]
            flat[i] = orig + eps
            f_plus = fn().item()
            flat[i] = orig - eps
            f_minus = fn().item()
            flat[i] = orig
            numeric = (f_plus - f_minus) / (2.0 * eps)
            a = grad.reshape(-1)[i]
            rel = abs(a - numeric) / max(abs(a), abs(numeric), 1e-8)
            max_rel = max(max_rel, rel)
    return max_rel
