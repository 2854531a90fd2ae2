"""Diagnostic analyses: share-private ablation and batch-diversity elbow.

The elbow diagnostic clusters one selected batch's gradient embeddings with
k-means for k = 1..k_max and takes k* at the point of maximum perpendicular
distance between the (axis-normalized) loss curve and its end-to-end chord.
The ablation re-runs the learning loop and scores the shared-only and
private-only halves of a share-private model next to the whole model.
"""

from dataclasses import dataclass, field

import numpy as np

from mdalbench import rng as rngmod
from mdalbench.acquisition import acquire
from mdalbench.data import reveal_labels
from mdalbench.engine import ExperimentConfig, init_experiment, run_single
from mdalbench.errors import ConfigError
from mdalbench.metrics import LearningCurve
from mdalbench.models.graph import (
    SHARE_PRIVATE_KINDS,
    badge_gradient_embedding,
    split_part_predict,
)

KMEANS_RESTARTS = 5
KMEANS_ITERS = 50


def _lloyd(points: np.ndarray, centers: np.ndarray, iters: int):
    """Run Lloyd iterations from the given centers; return (WCSS, centers)."""
    for _ in range(iters):
        d2 = ((points[:, None, :] - centers[None, :, :]) ** 2).sum(axis=2)
        assign = d2.argmin(axis=1)
        new_centers = centers.copy()
        for j in range(centers.shape[0]):
            members = points[assign == j]
            if members.shape[0]:
                new_centers[j] = members.mean(axis=0)
        if np.array_equal(new_centers, centers):
            break
        centers = new_centers
    d2 = ((points[:, None, :] - centers[None, :, :]) ** 2).sum(axis=2)
    return float(d2.min(axis=1).sum()), centers


def _kmeanspp_centers(points: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    n = points.shape[0]
    chosen = [int(rng.integers(n))]
    d2 = ((points - points[chosen[0]]) ** 2).sum(axis=1)
    while len(chosen) < k:
        total = d2.sum()
        if total > 0:
            i = int(rng.choice(n, p=d2 / total))
        else:
            i = int(rng.choice(np.setdiff1d(np.arange(n), chosen)))
        chosen.append(i)
        d2 = np.minimum(d2, ((points - points[i]) ** 2).sum(axis=1))
    return points[chosen].copy()


def kmeans_wcss(points: np.ndarray, k: int, seed: int,
                warm_centers: np.ndarray | None = None):
    """Best-of-restarts k-means loss; optionally seeded with warm centers.

    The warm start (previous k's best centers plus the point farthest from
    them) guarantees the loss curve is non-increasing in k.
    """
    best = np.inf
    best_centers = None
    for r in range(KMEANS_RESTARTS):
        rng = rngmod.substream(seed, f"kmeans/k{k}", r)
        wcss, centers = _lloyd(points, _kmeanspp_centers(points, k, rng), KMEANS_ITERS)
        if wcss < best:
            best, best_centers = wcss, centers
    if warm_centers is not None and warm_centers.shape[0] == k - 1:
        d2 = ((points[:, None, :] - warm_centers[None, :, :]) ** 2).sum(axis=2)
        far = int(d2.min(axis=1).argmax())
        seeded = np.vstack([warm_centers, points[far]])
        wcss, centers = _lloyd(points, seeded, KMEANS_ITERS)
        if wcss < best:
            best, best_centers = wcss, centers
    return best, best_centers


@dataclass
class DiversityReport:
    k_star: int
    losses: np.ndarray  # WCSS for k = 1..k_max
    k_max: int


def _chord_elbow(losses: np.ndarray) -> int:
    """k at max perpendicular distance to the chord, both axes in [0, 1]."""
    n = losses.size
    if n == 1 or losses[0] == losses[n - 1]:
        return 1
    x = np.linspace(0.0, 1.0, n)
    y = (losses - losses[n - 1]) / (losses[0] - losses[n - 1])
    # chord runs from (0, 1) to (1, 0); distance ~ |x + y - 1| / sqrt(2)
    return int(np.abs(x + y - 1.0).argmax()) + 1


def elbow_diversity(embeddings: np.ndarray, k_max: int, seed: int = 0) -> DiversityReport:
    """Elbow-method diversity of one batch's embeddings.

    With fewer than k distinct points the loss is exactly zero from that k
    on, and the elbow is computed on the curve truncated there.
    """
    points = np.asarray(embeddings, dtype=np.float64)
    if points.ndim != 2 or points.shape[0] < 1:
        raise ValueError("embeddings must be a nonempty 2-D array")
    if not 2 <= k_max <= points.shape[0]:
        raise ValueError("k_max must lie in [2, batch size]")
    n_distinct = np.unique(points, axis=0).shape[0]
    losses = np.zeros(k_max)
    centers = None
    for k in range(1, min(k_max, n_distinct) + 1):
        losses[k - 1], centers = kmeans_wcss(points, k, seed, warm_centers=centers)
    truncated = losses[: min(k_max, n_distinct)]
    return DiversityReport(_chord_elbow(truncated), losses, k_max)


def min_pairwise_distance(embeddings: np.ndarray) -> float:
    """Smallest pairwise distance within a batch (diversity tendency probe)."""
    points = np.asarray(embeddings, dtype=np.float64)
    if points.shape[0] < 2:
        return 0.0
    d2 = ((points[:, None, :] - points[None, :, :]) ** 2).sum(axis=2)
    d2[np.diag_indices_from(d2)] = np.inf
    return float(np.sqrt(d2.min()))


@dataclass
class AblationReport:
    """Whole / shared-only / private-only learning curves, shared checkpoints."""

    whole: LearningCurve
    shared_only: LearningCurve
    private_only: LearningCurve
    per_repeat: list = field(default_factory=list)


def _part_accuracy(model, pool, part: str) -> float:
    correct = 0
    total = 0
    for k, d in enumerate(pool.domains):
        probs = split_part_predict(model, d.test_x, k, part)
        correct += int((probs.argmax(axis=1) == d.test_y).sum())
        total += d.test_y.size
    return correct / total


def ablation_report(config: ExperimentConfig) -> AblationReport:
    """Run the experiment, scoring each model part at every checkpoint."""
    if config.model not in SHARE_PRIVATE_KINDS:
        raise ConfigError("ablation needs a share-private architecture (man or can)")

    def hook(model, pool):
        return {part: _part_accuracy(model, pool, part)
                for part in ("whole", "shared", "private")}

    records = []
    for repeat in range(config.repeats):
        records.append(run_single(config, repeat, eval_hook=hook))

    costs = [row.cost for row in records[0].rows]
    curves = {}
    for part in ("whole", "shared", "private"):
        mean = [float(np.mean([rec.rows[i].extra[part] for rec in records]))
                for i in range(len(costs))]
        curves[part] = LearningCurve(costs, mean)
    return AblationReport(curves["whole"], curves["shared"], curves["private"],
                          per_repeat=records)


def first_batch_embeddings(config: ExperimentConfig, strategy: str, repeat: int):
    """Gradient embeddings of the first acquired batch of one seeded run."""
    pool, model = init_experiment(config, repeat)
    b = min(config.al_batch, config.budget - pool.labeled_cost(),
            pool.unlabeled_count())
    query = acquire(strategy, model, pool, b,
                    rngmod.substream(config.seed, "iter1/acquire", repeat))
    blocks = []
    for k, i in query.handles:
        x = pool.domains[k].train_x[i:i + 1]
        blocks.append(badge_gradient_embedding(model, x, k))
    reveal_labels(pool, query)
    return np.vstack(blocks)


def batch_diversity(config: ExperimentConfig, strategies, repeats,
                    k_max: int | None = None) -> dict:
    """Mean elbow k* of the first selected batch, per strategy."""
    if k_max is None:
        k_max = min(30, config.al_batch)
    out = {}
    for strategy in strategies:
        stars = []
        for repeat in range(repeats):
            emb = first_batch_embeddings(config, strategy, repeat)
            stars.append(elbow_diversity(emb, min(k_max, emb.shape[0]),
                                         seed=config.seed).k_star)
        out[strategy] = (float(np.mean(stars)), stars)
    return out
