"""The pool-based multi-domain active-learning loop.

One run: draw an initial labeled set, fit a warm-start model, then iterate
acquire -> reveal -> retrain from a fresh initialization -> evaluate until
the labeling budget is spent. run_experiment executes several independent
seeded repeats and aggregates the learning curves.

All randomness flows through named substreams of (seed, label, repeat), and
the labels never mention the model or strategy, so sweep cells sharing a seed
see identical pools, splits, and initial labeled sets (paired comparisons).
"""

import time
import warnings
from dataclasses import dataclass, field, replace

import numpy as np

from mdalbench import rng as rngmod
from mdalbench.acquisition import acquire, proportional_allocation
from mdalbench.data import (
    MultiDomainPool,
    QuerySet,
    SyntheticSpec,
    generate_synthetic,
    load_manifest,
    reveal_labels,
    split_pool,
)
from mdalbench.errors import ConfigError, TrainingError
from mdalbench.models.graph import ARCHITECTURE_KINDS, build_model, forward_predict
from mdalbench.models.train import TrainParams, fit


@dataclass
class DatasetSpec:
    """Either a synthetic generator spec or a manifest path."""

    synthetic: SyntheticSpec | None = None
    manifest: str | None = None

    def __post_init__(self):
        if (self.synthetic is None) == (self.manifest is None):
            raise ConfigError("dataset must be exactly one of synthetic or manifest")


@dataclass
class ExperimentConfig:
    model: str
    strategy: str
    dataset: DatasetSpec
    budget: int
    initial_labeled: int
    al_batch: int
    repeats: int = 1
    seed: int = 0
    hidden_dim: int = 64
    lam: float = 0.1
    split: tuple = (0.8, 0.1, 0.1)
    train: TrainParams = field(default_factory=TrainParams)
    dump_scores: bool = False

    def validate(self):
        if self.model not in ARCHITECTURE_KINDS:
            raise ConfigError(f"unknown model {self.model!r}")
        from mdalbench.acquisition import STRATEGY_KINDS

        if self.strategy not in STRATEGY_KINDS:
            raise ConfigError(f"unknown strategy {self.strategy!r}")
        for name in ("budget", "initial_labeled", "al_batch", "repeats", "hidden_dim"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be positive")
        if self.initial_labeled >= self.budget:
            raise ConfigError("budget must exceed the initial labeled size")
        if self.residual_batch:
            warnings.warn(
                f"budget {self.budget} is not initial + n*batch; the final "
                f"batch will hold {self.residual_batch} instances")
        return self

    @property
    def n_iterations(self) -> int:
        """AL iterations after the warm start."""
        return -(-(self.budget - self.initial_labeled) // self.al_batch)

    @property
    def residual_batch(self) -> int:
        return (self.budget - self.initial_labeled) % self.al_batch


@dataclass
class IterationRow:
    repeat: int
    iteration: int
    cost: int
    micro_acc: float
    domain_acc: list
    wall_time: float
    extra: dict = field(default_factory=dict)


@dataclass
class RunRecord:
    repeat: int
    rows: list = field(default_factory=list)
    exhausted_pool: bool = False


def jsonl_row(row: IterationRow, config: ExperimentConfig) -> dict:
    """The persisted form; keys and order are part of the output contract."""
    return {
        "repeat": row.repeat,
        "iteration": row.iteration,
        "cost": row.cost,
        "micro_acc": row.micro_acc,
        "domain_acc": row.domain_acc,
        "model": config.model,
        "strategy": config.strategy,
        "seed": config.seed,
    }


def build_pool(config: ExperimentConfig) -> MultiDomainPool:
    """Materialize and split the dataset; identical for every repeat and cell."""
    if config.dataset.synthetic is not None:
        pool = generate_synthetic(config.dataset.synthetic,
                                  rngmod.substream(config.seed, "data"))
    else:
        pool = load_manifest(config.dataset.manifest)
    return split_pool(pool, config.split, rngmod.substream(config.seed, "splits"))


def draw_initial_labels(pool: MultiDomainPool, size: int,
                        rng: np.random.Generator) -> QuerySet:
    """Uniform per-domain warm-start draw, allocation proportional to pools."""
    sizes = [pool.unlabeled_indices(k).size for k in range(pool.n_domains)]
    if size < 1:
        raise ConfigError("initial labeled size must be positive")
    if size > sum(sizes):
        raise ConfigError(f"initial labeled size {size} exceeds pool size {sum(sizes)}")
    alloc = proportional_allocation(sizes, size)
    handles = []
    for k, count in enumerate(alloc):
        idx = pool.unlabeled_indices(k)
        picked = np.sort(rng.choice(idx, size=count, replace=False))
        handles.extend((k, int(i)) for i in picked)
    return QuerySet(handles, size)


def evaluate_test(model, pool: MultiDomainPool):
    """Micro and per-domain accuracy on the test partitions."""
    correct = 0
    total = 0
    per_domain = []
    for k, d in enumerate(pool.domains):
        if d.test_x.shape[0] == 0:
            raise TrainingError(f"domain {d.name!r} has an empty test partition")
        pred = forward_predict(model, d.test_x, k).probs.argmax(axis=1)
        hits = int((pred == d.test_y).sum())
        per_domain.append(hits / d.test_y.size)
        correct += hits
        total += d.test_y.size
    return correct / total, per_domain


def _fresh_fit(config: ExperimentConfig, pool: MultiDomainPool, repeat: int,
               iteration: int):
    """Retrain from a fresh initialization on the current labeled set."""
    model = build_model(config.model, pool.feature_dim, config.hidden_dim,
                        pool.n_classes, pool.n_domains, config.lam,
                        rngmod.substream(config.seed, f"iter{iteration}/model", repeat))
    fit(model, pool, config.train,
        rngmod.substream(config.seed, f"iter{iteration}/train", repeat))
    return model


def init_experiment(config: ExperimentConfig, repeat: int):
    """Warm start: initial labels plus the first trained model."""
    pool = build_pool(config)
    init = draw_initial_labels(pool, config.initial_labeled,
                               rngmod.substream(config.seed, "init-labels", repeat))
    reveal_labels(pool, init)
    model = _fresh_fit(config, pool, repeat, 0)
    return pool, model


def run_single(config: ExperimentConfig, repeat: int, eval_hook=None,
               row_sink=None, query_hook=None) -> RunRecord:
    """One seeded run. eval_hook(model, pool) -> dict adds in-memory extras."""
    record = RunRecord(repeat)
    started = time.perf_counter()
    pool, model = init_experiment(config, repeat)

    def push(iteration):
        nonlocal started
        micro, per_domain = evaluate_test(model, pool)
        row = IterationRow(repeat, iteration, pool.labeled_cost(), micro,
                           per_domain, time.perf_counter() - started)
        if eval_hook is not None:
            row.extra = eval_hook(model, pool)
        record.rows.append(row)
        if row_sink is not None:
            row_sink(jsonl_row(row, config))
        started = time.perf_counter()

    push(0)
    iteration = 0
    while pool.labeled_cost() < config.budget:
        remaining = pool.unlabeled_count()
        if remaining == 0:
            record.exhausted_pool = True
            break
        iteration += 1
        b = min(config.al_batch, config.budget - pool.labeled_cost(), remaining)
        query = acquire(config.strategy, model, pool, b,
                        rngmod.substream(config.seed, f"iter{iteration}/acquire", repeat))
        if query_hook is not None:
            query_hook(iteration, model, pool, query)
        reveal_labels(pool, query)
        model = _fresh_fit(config, pool, repeat, iteration)
        push(iteration)
    return record


def aggregate_curves(records) -> list:
    """Pointwise (cost, mean, sample std) across repeats."""
    by_cost = {}
    for record in records:
        for row in record.rows:
            by_cost.setdefault(row.cost, []).append(row.micro_acc)
    out = []
    for cost in sorted(by_cost):
        vals = np.asarray(by_cost[cost])
        std = float(vals.std(ddof=1)) if vals.size > 1 else 0.0
        out.append((cost, float(vals.mean()), std))
    return out


def run_experiment(config: ExperimentConfig, row_sink=None, eval_hook=None):
    """All repeats plus the aggregate curve; rows are flushed as they finish."""
    config.validate()
    records = []
    for repeat in range(config.repeats):
        records.append(run_single(config, repeat, eval_hook=eval_hook,
                                  row_sink=row_sink))
    return records, aggregate_curves(records)


def with_overrides(config: ExperimentConfig, **kwargs) -> ExperimentConfig:
    return replace(config, **kwargs)
