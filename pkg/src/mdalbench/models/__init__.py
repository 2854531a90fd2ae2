"""The six multi-domain architectures, their losses, training, and embeddings."""

from mdalbench.models.checkpoint import load_checkpoint, save_checkpoint
from mdalbench.models.graph import (
    ADVERSARIAL_KINDS,
    ARCHITECTURE_KINDS,
    SHARE_PRIVATE_KINDS,
    ForwardTrace,
    ModelGraph,
    badge_gradient_embedding,
    build_model,
    forward_predict,
    parameter_count,
    penultimate_embedding,
    split_part_predict,
)
from mdalbench.models.losses import adversarial_loss, supervised_loss, zero_grad
from mdalbench.models.train import FitResult, TrainParams, evaluate_micro, fit
from mdalbench.models.verify import check_model_gradients

__all__ = [
    "ADVERSARIAL_KINDS",
    "ARCHITECTURE_KINDS",
    "SHARE_PRIVATE_KINDS",
    "FitResult",
    "ForwardTrace",
    "ModelGraph",
    "TrainParams",
    "adversarial_loss",
    "badge_gradient_embedding",
    "build_model",
    "check_model_gradients",
    "evaluate_micro",
    "fit",
    "forward_predict",
    "load_checkpoint",
    "parameter_count",
    "penultimate_embedding",
    "save_checkpoint",
    "split_part_predict",
    "supervised_loss",
    "zero_grad",
]
