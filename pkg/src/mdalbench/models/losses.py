"""Loss evaluation with gradient accumulation into the model's layers.

Batches may mix domains; instances are grouped by domain and each group is
forwarded and backpropagated before the next so layer caches stay coherent.
Gradients accumulate, so the total training gradient of one step is the sum
of the supervised and (for adversarial kinds) the adversarial contributions.
"""

import numpy as np

from mdalbench.errors import ConfigError
from mdalbench.models.graph import (
    ADVERSARIAL_KINDS,
    SHARE_PRIVATE_KINDS,
    ModelGraph,
    forward_predict,
)
from mdalbench.nn.losses import reverse_gradient, softmax_cross_entropy


def zero_grad(model: ModelGraph):
    for _, layer in model.layers():
        layer.zero_grad()


def _domain_groups(domains: np.ndarray):
    for k in np.unique(domains):
        yield int(k), np.flatnonzero(domains == k)


def _backward_penultimate(model: ModelGraph, domain: int, dpenult: np.ndarray):
    """Push a penultimate-vector gradient back through the routed extractors."""
    if model.kind in SHARE_PRIVATE_KINDS:
        h = model.hidden_dim
        model.shared.backward(dpenult[:, :h])
        model.privates[domain].backward(dpenult[:, h:])
    elif model.kind == "sdl-separate":
        model.privates[domain].backward(dpenult)
    else:
        model.shared.backward(dpenult)


def supervised_loss(model: ModelGraph, x: np.ndarray, y: np.ndarray,
                    domains: np.ndarray) -> float:
    """Mean cross-entropy over a labeled batch; accumulates gradients."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y)
    domains = np.asarray(domains)
    n = x.shape[0]
    if n == 0:
        raise ValueError("supervised batch must be nonempty")
    total = 0.0
    for k, idx in _domain_groups(domains):
        trace = forward_predict(model, x[idx], k)
        loss, dlogits = softmax_cross_entropy(trace.logits, y[idx], grad_scale=1.0 / n)
        total += loss * idx.size / n
        dpenult = model.classifier_for(k).backward(dlogits)
        _backward_penultimate(model, k, dpenult)
    return total


def _condition_vectors(model: ModelGraph, x, domains, y, labeled):
    """Class-probability conditioning for the can discriminator.

    True one-hot rows for labeled instances; predicted distributions for
    unlabeled ones, treated as constants (no gradient back to the classifier).
    """
    cond = np.zeros((x.shape[0], model.n_classes))
    for k, idx in _domain_groups(domains):
        lab = idx[labeled[idx]]
        unl = idx[~labeled[idx]]
        if lab.size:
            cond[lab, y[lab]] = 1.0
        if unl.size:
            cond[unl] = forward_predict(model, x[unl], k).probs
    return cond


def adversarial_loss(model: ModelGraph, x: np.ndarray, domains: np.ndarray,
                     y: np.ndarray | None = None,
                     labeled: np.ndarray | None = None,
                     conditions: np.ndarray | None = None) -> float:
    """Domain-discriminator cross-entropy routed through gradient reversal.

    The discriminator receives the shared features (plus the conditioning
    block for can) and is trained to predict the domain id; the reversal
    multiplies the gradient reaching the shared extractor by -lambda. For can,
    y/labeled identify which rows may use their true label as conditioning;
    `conditions` overrides the computed conditioning (used by gradient checks
    to freeze the detached block).
    """
    if model.kind not in ADVERSARIAL_KINDS:
        raise ConfigError(f"{model.kind} has no discriminator")
    x = np.asarray(x, dtype=np.float64)
    domains = np.asarray(domains)
    n = x.shape[0]
    if n == 0:
        raise ValueError("adversarial batch must be nonempty")
    if model.kind == "can" and conditions is None:
        if y is None or labeled is None:
            raise ValueError("can conditioning needs y and labeled masks")
        conditions = _condition_vectors(model, x, domains, y, labeled)

    total = 0.0
    for k, idx in _domain_groups(domains):
        shared = model.shared.forward(x[idx])
        disc_in = shared
        if model.kind == "can":
            disc_in = np.hstack([shared, conditions[idx]])
        logits = model.discriminator.forward(disc_in)
        loss, dlogits = softmax_cross_entropy(
            logits, np.full(idx.size, k), grad_scale=1.0 / n)
        total += loss * idx.size / n
        dinput = model.discriminator.backward(dlogits)
        dshared = dinput[:, : model.hidden_dim]  # conditioning block is detached
        model.shared.backward(reverse_gradient(dshared, model.lam))
    return total
