"""Domain-invariance probe: how well a linear head can recover the domain id
from a model's frozen features. Adversarially trained shared features should
score lower than per-domain features."""

import numpy as np

from mdalbench import rng as rngmod
from mdalbench.nn.layers import DenseLayer
from mdalbench.nn.losses import softmax_cross_entropy
from mdalbench.nn.optim import Optimizer

PROBE_STEPS = 200
PROBE_LR = 0.05


def shared_feature_fn(model):
    """Shared-extractor features (adversarial architectures)."""
    return lambda x, k: model.shared.forward(np.asarray(x, dtype=np.float64))


def private_feature_fn(model):
    """The instance's own domain pathway (sdl-separate)."""
    return lambda x, k: model.privates[k].forward(np.asarray(x, dtype=np.float64))


def probe_domain_accuracy(feature_fn, pool, seed: int) -> float:
    """Train a softmax head to predict the domain id from frozen features.

    Full-batch Adam on the train partitions; accuracy on the test partitions.
    """
    train_f, train_d, test_f, test_d = [], [], [], []
    for k, dom in enumerate(pool.domains):
        train_f.append(feature_fn(dom.train_x, k))
        train_d.append(np.full(dom.train_x.shape[0], k))
        test_f.append(feature_fn(dom.test_x, k))
        test_d.append(np.full(dom.test_x.shape[0], k))
    x = np.vstack(train_f)
    d = np.concatenate(train_d)
    xt = np.vstack(test_f)
    dt = np.concatenate(test_d)

    head = DenseLayer(x.shape[1], pool.n_domains, "identity",
                      rng=rngmod.substream(seed, "probe"))
    optimizer = Optimizer("adam", PROBE_LR)
    for _ in range(PROBE_STEPS):
        head.zero_grad()
        logits = head.forward(x)
        _, dlogits = softmax_cross_entropy(logits, d)
        head.backward(dlogits)
        optimizer.step(head.parameters("probe"))
    pred = head.forward(xt).argmax(axis=1)
    return float((pred == dt).mean())
