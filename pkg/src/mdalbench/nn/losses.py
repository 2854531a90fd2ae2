"""Softmax cross-entropy and the gradient-reversal backward rule."""

import numpy as np

_LOG_FLOOR = 1e-30


def softmax(logits: np.ndarray) -> np.ndarray:
    """Row-wise softmax with max-subtraction for stability."""
    z = np.asarray(logits, dtype=np.float64)
    z = z - z.max(axis=1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=1, keepdims=True)


def softmax_cross_entropy(logits: np.ndarray, labels: np.ndarray,
                          grad_scale: float | None = None):
    """Mean cross-entropy over rows and its gradient w.r.t. the logits.

    Returns (loss, dlogits) with dlogits row = (softmax - onehot) * grad_scale.
    grad_scale defaults to 1/n so the pair matches the row-mean loss; callers
    that average over a larger enclosing batch pass 1/n_total and weight the
    loss themselves.
    """
    labels = np.asarray(labels)
    n, c = np.asarray(logits).shape
    if labels.shape != (n,):
        raise ValueError(f"expected {n} labels, got shape {labels.shape}")
    if labels.min(initial=0) < 0 or labels.max(initial=0) >= c:
        raise ValueError(f"labels must lie in [0, {c})")
    p = softmax(logits)
    picked = p[np.arange(n), labels]
    loss = float(-np.log(np.maximum(picked, _LOG_FLOOR)).mean())
    if grad_scale is None:
        grad_scale = 1.0 / n
    dlogits = p.copy()
    dlogits[np.arange(n), labels] -= 1.0
    dlogits *= grad_scale
    return loss, dlogits


def reverse_gradient(upstream: np.ndarray, lam: float) -> np.ndarray:
    """Backward rule of the gradient-reversal op (forward is identity).

    The upstream gradient is negated and scaled by the trade-off lam, turning
    a discriminator loss into a confusion signal for the feature extractor.
    """
    if lam < 0:
        raise ValueError("reversal trade-off must be >= 0")
    return -lam * np.asarray(upstream)
