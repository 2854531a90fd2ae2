"""Model fitting on a multi-domain pool.

Each epoch shuffles the pooled labeled training instances of all domains into
mini-batches for the supervised loss; adversarial architectures additionally
draw a mixed labeled+unlabeled batch from the train partitions for the
discriminator term. Validation data is carved 80/20 from the labeled set per
domain (the active-learning loop re-carves it each iteration), micro accuracy
is evaluated once per epoch, and the best-snapshot parameters are restored at
the end.
"""

from dataclasses import dataclass, field

import numpy as np

from mdalbench.errors import TrainingError
from mdalbench.models.graph import ADVERSARIAL_KINDS, ModelGraph, forward_predict
from mdalbench.models.losses import adversarial_loss, supervised_loss, zero_grad
from mdalbench.nn.optim import EarlyStopMonitor, Optimizer, TrainSchedule


@dataclass
class TrainParams:
    optimizer: str = "adam"
    learning_rate: float = 1e-3
    lr_decay: float | None = None
    batch_size: int = 32
    weight_decay: float = 0.0
    patience: int = 10
    max_epochs: int = 200
    val_fraction: float = 0.2


@dataclass
class FitResult:
    history: list = field(default_factory=list)  # per-epoch validation micro accuracy
    epochs: int = 0
    best_val: float = float("nan")


def evaluate_micro(model: ModelGraph, xs, ys) -> float:
    """Micro accuracy over per-domain (x, y) arrays."""
    correct = 0
    total = 0
    for k, (x, y) in enumerate(zip(xs, ys)):
        if x.shape[0] == 0:
            continue
        pred = forward_predict(model, x, k).probs.argmax(axis=1)
        correct += int((pred == y).sum())
        total += y.size
    return correct / total if total else 0.0


def _carve_validation(pool, val_fraction, rng):
    """Per-domain 80/20 carve of the labeled set into fit-train and fit-val."""
    train, val = [], []
    for k in range(pool.n_domains):
        x, y = pool.labeled_arrays(k)
        n = x.shape[0]
        if n == 0:
            raise TrainingError(f"domain {k} has no labeled instances")
        n_val = max(1, int(np.floor(val_fraction * n)))
        if n - n_val < 1:
            raise TrainingError(
                f"domain {k} has too few labeled instances ({n}) to carve validation")
        perm = rng.permutation(n)
        val_idx, train_idx = perm[:n_val], perm[n_val:]
        train.append((x[train_idx], y[train_idx]))
        val.append((x[val_idx], y[val_idx]))
    return train, val


def fit(model: ModelGraph, pool, params: TrainParams,
        rng: np.random.Generator) -> FitResult:
    """Train in place; returns the per-epoch validation history."""
    schedule = TrainSchedule(params.patience, params.max_epochs, params.lr_decay)
    if params.max_epochs == 0:
        return FitResult()

    train, val = _carve_validation(pool, params.val_fraction, rng)
    sup_x = np.vstack([x for x, _ in train])
    sup_y = np.concatenate([y for _, y in train])
    sup_d = np.concatenate([np.full(y.size, k) for k, (_, y) in enumerate(train)])

    adversarial = model.kind in ADVERSARIAL_KINDS
    if adversarial:
        # Discriminator pool: fit-train labeled instances plus everything
        # unlabeled, across all domains. Labels ride along only for the rows
        # whose mask says they are known (can conditioning).
        parts_x = [sup_x]
        parts_y = [sup_y]
        parts_d = [sup_d]
        parts_m = [np.ones(sup_y.size, dtype=bool)]
        for k in range(pool.n_domains):
            ux = pool.unlabeled_features(k)
            if ux.shape[0]:
                parts_x.append(ux)
                parts_y.append(np.zeros(ux.shape[0], dtype=np.int64))
                parts_d.append(np.full(ux.shape[0], k))
                parts_m.append(np.zeros(ux.shape[0], dtype=bool))
        adv_x = np.vstack(parts_x)
        adv_y = np.concatenate(parts_y)
        adv_d = np.concatenate(parts_d)
        adv_m = np.concatenate(parts_m)

    optimizer = Optimizer(params.optimizer, params.learning_rate, params.weight_decay)
    monitor = EarlyStopMonitor(params.patience)
    result = FitResult()
    val_xs = [x for x, _ in val]
    val_ys = [y for _, y in val]
    decays = 0

    n = sup_x.shape[0]
    for _ in range(params.max_epochs):
        order = rng.permutation(n)
        for start in range(0, n, params.batch_size):
            batch = order[start:start + params.batch_size]
            zero_grad(model)
            supervised_loss(model, sup_x[batch], sup_y[batch], sup_d[batch])
            if adversarial:
                pick = rng.choice(adv_x.shape[0],
                                  size=min(batch.size, adv_x.shape[0]),
                                  replace=False)
                adversarial_loss(model, adv_x[pick], adv_d[pick],
                                 y=adv_y[pick], labeled=adv_m[pick])
            optimizer.step(model.parameters())

        result.epochs += 1
        acc = evaluate_micro(model, val_xs, val_ys)
        result.history.append(acc)
        stop = monitor.update(acc, model.snapshot)
        if schedule.maybe_decay(optimizer, monitor.stale_count, decays):
            decays += 1
        if stop:
            break

    if monitor.best_snapshot is not None:
        model.restore(monitor.best_snapshot)
    result.best_val = monitor.best_value
    return result
