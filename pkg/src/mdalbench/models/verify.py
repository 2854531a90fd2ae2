"""Finite-difference verification of whole-model gradients.

The adversarial objective is a minimax: the discriminator descends its
cross-entropy while the reversal makes the shared extractor ascend it. The
implemented gradients therefore match two scalar surrogates, checked
separately per parameter group:

  extractor/classifier params:  L_sup - lambda * L_disc
  discriminator params:         L_sup + L_disc

with the can conditioning block frozen at its reference values, mirroring
its detachment in the analytic path.
"""

import numpy as np

from mdalbench.models.graph import ADVERSARIAL_KINDS, ModelGraph
from mdalbench.models.losses import (
    _condition_vectors,
    adversarial_loss,
    supervised_loss,
    zero_grad,
)
from mdalbench.nn.gradcheck import grad_check


def check_model_gradients(model: ModelGraph, x, y, domains,
                          adv_x=None, adv_domains=None, adv_y=None,
                          adv_labeled=None, eps: float = 1e-5) -> float:
    """Max relative error of the analytic total-loss gradients."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y)
    domains = np.asarray(domains)
    adversarial = model.kind in ADVERSARIAL_KINDS

    conditions = None
    if adversarial:
        adv_x = np.asarray(adv_x, dtype=np.float64)
        adv_domains = np.asarray(adv_domains)
        if model.kind == "can":
            conditions = _condition_vectors(model, adv_x, adv_domains,
                                            np.asarray(adv_y),
                                            np.asarray(adv_labeled))

    zero_grad(model)
    supervised_loss(model, x, y, domains)
    if adversarial:
        adversarial_loss(model, adv_x, adv_domains, conditions=conditions)
    analytic = model.gradients()

    def sup():
        return supervised_loss(model, x, y, domains)

    def disc():
        return adversarial_loss(model, adv_x, adv_domains, conditions=conditions)

    params = model.parameter_values()
    if not adversarial:
        return grad_check(sup, params, analytic, eps)

    disc_names = {name for name, _ in params if name.startswith("discriminator")}
    min_params = [(n, v) for n, v in params if n not in disc_names]
    max_params = [(n, v) for n, v in params if n in disc_names]
    err_min = grad_check(lambda: sup() - model.lam * disc(), min_params, analytic, eps)
    err_max = grad_check(lambda: sup() + disc(), max_params, analytic, eps)
    return max(err_min, err_max)
