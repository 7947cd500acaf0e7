"""Shared test helpers: finite differences and tiny model fixtures."""

from __future__ import annotations

import numpy as np

from qseg.autodiff import Tensor


def finite_difference_check(loss_fn, tensors: list[Tensor], eps: float = 1e-4,
                            rtol: float = 1e-4) -> float:
    """Compare analytic gradients against central finite differences.

    loss_fn must build a fresh graph, call backward, and return the scalar
    loss; gradients accumulate on the given tensors.  Returns the worst
    relative error seen.
    """
    for t in tensors:
        t.zero_grad()
    loss_fn()
    grads = [np.zeros_like(t.v) if t.g is None else t.g.copy() for t in tensors]
    worst = 0.0
    for t, grad in zip(tensors, grads):
        flat_v = t.v.reshape(-1)
        flat_g = grad.reshape(-1)
        for k in range(flat_v.size):
            orig = flat_v[k]
            flat_v[k] = orig + eps
            for other in tensors:
                other.zero_grad()
            plus = loss_fn()
            flat_v[k] = orig - eps
            for other in tensors:
                other.zero_grad()
            minus = loss_fn()
            flat_v[k] = orig
            numeric = (plus - minus) / (2 * eps)
            denom = max(abs(numeric), abs(flat_g[k]), 1.0)
            err = abs(numeric - flat_g[k]) / denom
            worst = max(worst, err)
            assert err < rtol, (
                f"gradient mismatch at {t!r}[{k}]: analytic {flat_g[k]:.10f}"
                f" vs numeric {numeric:.10f}"
            )
    for t in tensors:
        t.zero_grad()
    return worst
