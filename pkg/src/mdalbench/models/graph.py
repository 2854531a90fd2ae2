"""Wiring of the six multi-domain architectures.

Every architecture composes the same microstructure: a feature extractor is
one relu dense layer (input -> hidden), a classifier head is one dense layer
producing class logits, and the discriminator is one dense layer producing
domain logits. What varies is which components exist and how instances are
routed through them:

  sdl-joint     one shared F, one C
  sdl-separate  per-domain F and C, nothing shared
  dann          shared F, one C, discriminator on the shared features
  mdnet         shared F, per-domain C
  man           shared F + per-domain F, one C on [shared; private],
                discriminator on the shared features
  can           as man, with the discriminator also fed the class
                probabilities (true one-hot when known, detached predictions
                otherwise)
"""

from dataclasses import dataclass

import numpy as np

from mdalbench.errors import ConfigError
from mdalbench.nn.layers import DenseLayer
from mdalbench.nn.losses import softmax

ARCHITECTURE_KINDS = ("sdl-joint", "sdl-separate", "dann", "mdnet", "man", "can")
ADVERSARIAL_KINDS = frozenset({"dann", "man", "can"})
SHARE_PRIVATE_KINDS = frozenset({"man", "can"})


@dataclass
class ForwardTrace:
    """Intermediate values of one routed forward pass (all per-row)."""

    shared: np.ndarray | None
    private: np.ndarray | None
    penultimate: np.ndarray
    logits: np.ndarray
    probs: np.ndarray


class ModelGraph:
    def __init__(self, kind, n_domains, n_classes, input_dim, hidden_dim, lam):
        self.kind = kind
        self.n_domains = n_domains
        self.n_classes = n_classes
        self.input_dim = input_dim
        self.hidden_dim = hidden_dim
        self.lam = lam
        self.shared = None
        self.privates = []
        self.classifiers = []
        self.discriminator = None

    @property
    def has_shared(self) -> bool:
        return self.shared is not None

    @property
    def has_private(self) -> bool:
        return bool(self.privates)

    @property
    def penultimate_dim(self) -> int:
        return self.classifiers[0].in_dim

    def classifier_for(self, domain: int) -> DenseLayer:
        return self.classifiers[domain % len(self.classifiers)]

    def layers(self):
        """(name, layer) pairs in a fixed deterministic order."""
        if self.shared is not None:
            yield "shared", self.shared
        for k, layer in enumerate(self.privates):
            yield f"private{k}", layer
        for k, layer in enumerate(self.classifiers):
            yield f"classifier{k}", layer
        if self.discriminator is not None:
            yield "discriminator", self.discriminator

    def parameters(self):
        for name, layer in self.layers():
            yield from layer.parameters(name)

    def parameter_values(self):
        return [(name, value) for name, value, _ in self.parameters()]

    def gradients(self) -> dict:
        return {name: grad.copy() for name, _, grad in self.parameters()}

    def snapshot(self):
        return {name: layer.copy_values() for name, layer in self.layers()}

    def restore(self, snap):
        for name, layer in self.layers():
            layer.load_values(snap[name])


def build_model(kind: str, input_dim: int, hidden_dim: int, n_classes: int,
                n_domains: int, lam: float, rng: np.random.Generator) -> ModelGraph:
    """Instantiate an architecture; layer init order is fixed for determinism."""
    if kind not in ARCHITECTURE_KINDS:
        raise ConfigError(f"unknown architecture {kind!r}")
    if n_domains < 2:
        raise ConfigError("multi-domain learning needs at least two domains")
    if min(input_dim, hidden_dim, n_classes) < 1 or lam < 0:
        raise ConfigError("dims must be >= 1 and lambda >= 0")

    m = ModelGraph(kind, n_domains, n_classes, input_dim, hidden_dim, lam)
    extractor = lambda: DenseLayer(input_dim, hidden_dim, "relu", rng=rng)
    head = lambda in_dim, out: DenseLayer(in_dim, out, "identity", rng=rng)

    if kind == "sdl-joint":
        m.shared = extractor()
        m.classifiers = [head(hidden_dim, n_classes)]
    elif kind == "sdl-separate":
        m.privates = [extractor() for _ in range(n_domains)]
        m.classifiers = [head(hidden_dim, n_classes) for _ in range(n_domains)]
    elif kind == "dann":
        m.shared = extractor()
        m.classifiers = [head(hidden_dim, n_classes)]
        m.discriminator = head(hidden_dim, n_domains)
    elif kind == "mdnet":
        m.shared = extractor()
        m.classifiers = [head(hidden_dim, n_classes) for _ in range(n_domains)]
    elif kind == "man":
        m.shared = extractor()
        m.privates = [extractor() for _ in range(n_domains)]
        m.classifiers = [head(2 * hidden_dim, n_classes)]
        m.discriminator = head(hidden_dim, n_domains)
    else:  # can
        m.shared = extractor()
        m.privates = [extractor() for _ in range(n_domains)]
        m.classifiers = [head(2 * hidden_dim, n_classes)]
        m.discriminator = head(hidden_dim + n_classes, n_domains)
    return m


def parameter_count(model: ModelGraph) -> int:
    return sum(value.size for _, value, _ in model.parameters())


def _check_domain(model: ModelGraph, domain: int):
    if not 0 <= domain < model.n_domains:
        raise ValueError(f"domain id {domain} outside [0, {model.n_domains})")


def forward_predict(model: ModelGraph, x: np.ndarray, domain: int) -> ForwardTrace:
    """Route a batch of one domain's instances through the architecture."""
    _check_domain(model, domain)
    x = np.asarray(x, dtype=np.float64)
    shared = model.shared.forward(x) if model.has_shared else None
    private = None
    if model.has_private:
        private = model.privates[domain].forward(x)

    if model.kind in SHARE_PRIVATE_KINDS:
        penult = np.hstack([shared, private])
    elif model.kind == "sdl-separate":
        penult = private
    else:
        penult = shared
    logits = model.classifier_for(domain).forward(penult)
    return ForwardTrace(shared, private, penult, logits, softmax(logits))


def penultimate_embedding(model: ModelGraph, x: np.ndarray, domain: int) -> np.ndarray:
    """Classifier-input vectors, used as coreset embeddings."""
    return forward_predict(model, x, domain).penultimate


def badge_gradient_embedding(model: ModelGraph, x: np.ndarray, domain: int) -> np.ndarray:
    """Last-layer loss gradient at the predicted label, flattened per row.

    For row probabilities p with predicted class y_hat = argmax p and
    penultimate vector h, the embedding is [(p - onehot) outer h, p - onehot]
    matching the cross-entropy gradient w.r.t. the routed head's weights
    (class-major) and bias.
    """
    trace = forward_predict(model, x, domain)
    p = trace.probs
    residual = p.copy()
    residual[np.arange(p.shape[0]), p.argmax(axis=1)] -= 1.0
    outer = residual[:, :, None] * trace.penultimate[:, None, :]  # (n, C, h)
    return np.hstack([outer.reshape(p.shape[0], -1), residual])


def split_part_predict(model: ModelGraph, x: np.ndarray, domain: int,
                       part: str) -> np.ndarray:
    """Probabilities with the shared or private classifier-input segment zeroed.

    part='whole' reproduces forward_predict; 'shared' keeps only the shared
    segment, 'private' only the private one.
    """
    if model.kind not in SHARE_PRIVATE_KINDS:
        raise ConfigError(f"{model.kind} has no share-private structure to split")
    if part not in ("shared", "private", "whole"):
        raise ValueError(f"unknown part {part!r}")
    trace = forward_predict(model, x, domain)
    if part == "whole":
        return trace.probs
    penult = trace.penultimate.copy()
    h = model.hidden_dim
    if part == "shared":
        penult[:, h:] = 0.0
    else:
        penult[:, :h] = 0.0
    logits = model.classifier_for(domain).forward(penult)
    return softmax(logits)
