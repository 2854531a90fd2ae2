"""Acquisition strategies and their cross-domain pooling rules.

Score-based strategies (uncertainty, egl) score every unlabeled instance,
gather the scores of all domains into one ranking, and take the global top-b
with no per-domain quota. Two-stage strategies (coreset, badge) first pool
the instances' embeddings across domains, then select within that unified
pool. Random keeps a per-domain allocation proportional to unlabeled pool
sizes. Ties everywhere break by ascending (domain id, local index).
"""

import csv

import numpy as np

from mdalbench.data import MultiDomainPool, QuerySet
from mdalbench.errors import ConfigError
from mdalbench.models.graph import (
    ModelGraph,
    badge_gradient_embedding,
    forward_predict,
    penultimate_embedding,
)

STRATEGY_KINDS = ("random", "uncertainty", "egl", "coreset", "badge")
SCORE_BASED = frozenset({"uncertainty", "egl"})
TWO_STAGE = frozenset({"coreset", "badge"})


def score_bvsb(p: np.ndarray) -> np.ndarray:
    """Complemented best-vs-second-best margin; higher = more uncertain.

    Accepts one probability row or a batch; returns per-row scores
    1 - (p_(1) - p_(2)).
    """
    p = np.atleast_2d(np.asarray(p, dtype=np.float64))
    if p.shape[1] < 2:
        raise ValueError("bvsb needs at least two classes")
    part = np.sort(p, axis=1)
    return 1.0 - (part[:, -1] - part[:, -2])


def score_egl(probs: np.ndarray, penultimate: np.ndarray) -> np.ndarray:
    """Expected norm of the last-layer gradient over the predicted label law.

    Closed form: sum_y p_y * ||p - e_y||_2 * sqrt(||h||_2^2 + 1); the sqrt
    term folds in the bias-block contribution.
    """
    p = np.atleast_2d(np.asarray(probs, dtype=np.float64))
    h = np.atleast_2d(np.asarray(penultimate, dtype=np.float64))
    h_norm = np.sqrt((h * h).sum(axis=1) + 1.0)
    p_sq = (p * p).sum(axis=1, keepdims=True)
    # ||p - e_y||^2 = ||p||^2 - 2 p_y + 1, per candidate label y
    residual = np.sqrt(np.maximum(p_sq - 2.0 * p + 1.0, 0.0))
    return (p * residual).sum(axis=1) * h_norm


def select_top_b_global(scored, b: int) -> QuerySet:
    """Global descending rank of (handle, score) pairs; top b, no quota."""
    if b <= 0:
        raise ValueError("batch size must be positive")
    ranked = sorted(scored, key=lambda item: (-item[1], item[0][0], item[0][1]))
    return QuerySet([handle for handle, _ in ranked[:b]], b)


def select_coreset(labeled_emb: np.ndarray, unlabeled_emb: np.ndarray,
                   handles, b: int) -> QuerySet:
    """Greedy furthest-first cover conditioned on the labeled embeddings.

    Repeatedly picks the unlabeled point with the largest Euclidean distance
    to its nearest labeled-or-selected point. With no labeled points the
    first pick falls back to the first handle in (domain, index) order.
    """
    if b <= 0:
        raise ValueError("batch size must be positive")
    n = unlabeled_emb.shape[0]
    b = min(b, n)
    if labeled_emb.shape[0]:
        diff = unlabeled_emb[:, None, :] - labeled_emb[None, :, :]
        min_dist = np.sqrt((diff ** 2).sum(axis=2)).min(axis=1)
    else:
        min_dist = np.full(n, np.inf)
    picked = []
    for _ in range(b):
        # ties broken by the smallest handle, not by array position, so the
        # result is independent of domain concatenation order
        candidates = np.flatnonzero(min_dist == min_dist.max())
        i = int(min(candidates, key=lambda j: handles[j]))
        picked.append(i)
        dist = np.sqrt(((unlabeled_emb - unlabeled_emb[i]) ** 2).sum(axis=1))
        min_dist = np.minimum(min_dist, dist)
        min_dist[i] = -1.0  # never re-pick
    return QuerySet([handles[i] for i in picked], b)


def select_badge(embeddings: np.ndarray, handles, b: int,
                 rng: np.random.Generator) -> QuerySet:
    """k-means++ seeding over gradient embeddings; the seeds are the batch.

    The first seed is uniform; each next seed is drawn with probability
    proportional to the squared distance to its nearest chosen seed. When all
    remaining mass is zero (duplicate embeddings), the draw falls back to
    uniform over the unchosen points.
    """
    if b <= 0:
        raise ValueError("batch size must be positive")
    n = embeddings.shape[0]
    if b >= n:
        return QuerySet(list(handles), b)
    chosen = [int(rng.integers(n))]
    d2 = ((embeddings - embeddings[chosen[0]]) ** 2).sum(axis=1)
    d2[chosen[0]] = 0.0
    while len(chosen) < b:
        total = d2.sum()
        if total > 0.0:
            i = int(rng.choice(n, p=d2 / total))
        else:
            remaining = np.setdiff1d(np.arange(n), chosen)
            i = int(rng.choice(remaining))
        chosen.append(i)
        d2 = np.minimum(d2, ((embeddings - embeddings[i]) ** 2).sum(axis=1))
        d2[i] = 0.0
    return QuerySet([handles[i] for i in chosen], b)


def proportional_allocation(sizes, total: int) -> list:
    """Largest-remainder allocation of `total` across capped bins."""
    sizes = [int(s) for s in sizes]
    alloc = [0] * len(sizes)
    left = min(total, sum(sizes))
    while left > 0:
        active = [k for k in range(len(sizes)) if alloc[k] < sizes[k]]
        weight = sum(sizes[k] - alloc[k] for k in active)
        exact = {k: left * (sizes[k] - alloc[k]) / weight for k in active}
        grant = {k: int(np.floor(exact[k])) for k in active}
        rest = left - sum(grant.values())
        for k in sorted(active, key=lambda k: (-(exact[k] - grant[k]), k))[:rest]:
            grant[k] += 1
        for k in active:
            take = min(grant[k], sizes[k] - alloc[k])
            alloc[k] += take
            left -= take
    return alloc


def select_random(pool: MultiDomainPool, b: int, rng: np.random.Generator) -> QuerySet:
    """Uniform per-domain sampling, allocation proportional to pool sizes."""
    if b < 1:
        raise ValueError("batch size must be positive")
    sizes = [pool.unlabeled_indices(k).size for k in range(pool.n_domains)]
    alloc = proportional_allocation(sizes, b)
    handles = []
    for k, count in enumerate(alloc):
        idx = pool.unlabeled_indices(k)
        picked = np.sort(rng.choice(idx, size=count, replace=False))
        handles.extend((k, int(i)) for i in picked)
    return QuerySet(handles, b)


def _scored_handles(model: ModelGraph, pool: MultiDomainPool, strategy: str):
    scored = []
    for k in range(pool.n_domains):
        idx = pool.unlabeled_indices(k)
        if idx.size == 0:
            continue
        trace = forward_predict(model, pool.domains[k].train_x[idx], k)
        if strategy == "uncertainty":
            scores = score_bvsb(trace.probs)
        else:
            scores = score_egl(trace.probs, trace.penultimate)
        scored.extend(((k, int(i)), float(s)) for i, s in zip(idx, scores))
    return scored


def _embedding_pool(model: ModelGraph, pool: MultiDomainPool, embed_fn):
    handles, blocks = [], []
    for k in range(pool.n_domains):
        idx = pool.unlabeled_indices(k)
        if idx.size == 0:
            continue
        blocks.append(embed_fn(model, pool.domains[k].train_x[idx], k))
        handles.extend((k, int(i)) for i in idx)
    emb = np.vstack(blocks) if blocks else np.empty((0, 0))
    return emb, handles


def acquire(strategy: str, model: ModelGraph, pool: MultiDomainPool, b: int,
            rng: np.random.Generator) -> QuerySet:
    """Select the next batch of unlabeled handles with the given strategy."""
    if strategy not in STRATEGY_KINDS:
        raise ConfigError(f"unknown strategy {strategy!r}")
    b = min(b, pool.unlabeled_count())
    if strategy == "random":
        return select_random(pool, b, rng)
    if strategy in SCORE_BASED:
        return select_top_b_global(_scored_handles(model, pool, strategy), b)
    if strategy == "coreset":
        emb, handles = _embedding_pool(model, pool, penultimate_embedding)
        labeled_blocks = []
        for k in range(pool.n_domains):
            x, _ = pool.labeled_arrays(k)
            if x.shape[0]:
                labeled_blocks.append(penultimate_embedding(model, x, k))
        labeled = (np.vstack(labeled_blocks) if labeled_blocks
                   else np.empty((0, emb.shape[1])))
        return select_coreset(labeled, emb, handles, b)
    emb, handles = _embedding_pool(model, pool, badge_gradient_embedding)
    return select_badge(emb, handles, b, rng)


def dump_scores_csv(path, scored):
    """Per-iteration score dump: domain, index, score."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["domain", "index", "score"])
        for (k, i), score in scored:
            writer.writerow([k, i, repr(float(score))])


def dump_embeddings_csv(path, handles, embeddings):
    """Per-iteration embedding dump: domain, index, embedding columns."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        dim = embeddings.shape[1] if embeddings.size else 0
        writer.writerow(["domain", "index"] + [f"e{j}" for j in range(dim)])
        for (k, i), row in zip(handles, embeddings):
            writer.writerow([k, i] + [repr(float(v)) for v in row])
