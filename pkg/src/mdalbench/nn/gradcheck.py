"""Finite-difference verification of analytic gradients."""

import numpy as np


def grad_check(closure, params, analytic, eps: float = 1e-5) -> float:
    """Compare analytic gradients against central finite differences.

    closure() must return the scalar loss evaluated at the current values of
    `params`, a sequence of (name, array) pairs that are perturbed in place
    entry by entry. `analytic` maps each name to its gradient array. Returns
    the max relative error with denominator max(|analytic|, |numeric|, 1e-12).
    """
    if not 1e-7 <= eps <= 1e-3:
        raise ValueError("eps must lie in [1e-7, 1e-3]")
    worst = 0.0
    for name, value in params:
        flat = value.reshape(-1)
        grad = np.asarray(analytic[name]).reshape(-1)
        for i in range(flat.size):
            orig = flat[i]
            flat[i] = orig + eps
            up = closure()
            flat[i] = orig - eps
            down = closure()
            flat[i] = orig
            numeric = (up - down) / (2.0 * eps)
            denom = max(abs(grad[i]), abs(numeric), 1e-12)
            worst = max(worst, abs(grad[i] - numeric) / denom)
    return worst
