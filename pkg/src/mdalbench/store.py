"""On-disk layout of experiment results.

A cell directory (one model-strategy combination) holds:

    config.json      resolved config snapshot, reproduces the run
    results.jsonl    one object per learning-curve row, all repeats
    aggregate.csv    cost, mean, std of the micro-accuracy curve
    scores/          optional per-iteration score/embedding dumps

A sweep directory holds cells/<model>__<strategy>/ cell directories. Report
and plot commands discover cells by walking for results.jsonl files.
"""

import json
import shutil
from pathlib import Path

from mdalbench.acquisition import (
    SCORE_BASED,
    _embedding_pool,
    _scored_handles,
    dump_embeddings_csv,
    dump_scores_csv,
)
from mdalbench.config import make_experiment, snapshot_doc
from mdalbench.engine import aggregate_curves, run_single
from mdalbench.errors import ConfigError, DataError
from mdalbench.metrics import LearningCurve, aulc
from mdalbench.models.graph import badge_gradient_embedding, penultimate_embedding


def ensure_outdir(path, force: bool) -> Path:
    path = Path(path)
    if path.exists() and any(path.iterdir()):
        if not force:
            raise ConfigError(
                f"output directory {path} is not empty; pass --force to replace it")
        shutil.rmtree(path)
    path.mkdir(parents=True, exist_ok=True)
    return path


def write_aggregate_csv(path, aggregate):
    with open(path, "w") as fh:
        fh.write("cost,mean,std\n")
        for cost, mean, std in aggregate:
            fh.write(f"{cost},{mean!r},{std!r}\n")


def _score_dump_hook(config, scores_dir: Path, repeat: int):
    scores_dir.mkdir(exist_ok=True)

    def hook(iteration, model, pool, query):
        path = scores_dir / f"rep{repeat}_iter{iteration}.csv"
        if config.strategy in SCORE_BASED:
            dump_scores_csv(path, _scored_handles(model, pool, config.strategy))
        elif config.strategy in ("coreset", "badge"):
            embed = (penultimate_embedding if config.strategy == "coreset"
                     else badge_gradient_embedding)
            emb, handles = _embedding_pool(model, pool, embed)
            dump_embeddings_csv(path, handles, emb)

    return hook


def run_cell(doc: dict, model: str, strategy: str, out_dir) -> Path:
    """Execute one model-strategy cell and persist its results."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    config = make_experiment(doc, model, strategy)
    with open(out_dir / "config.json", "w") as fh:
        json.dump(snapshot_doc(doc, model, strategy, config.seed), fh, indent=2,
                  sort_keys=True)
        fh.write("\n")

    with open(out_dir / "results.jsonl", "w") as fh:
        def sink(row):
            fh.write(json.dumps(row))
            fh.write("\n")
            fh.flush()

        records = []
        for repeat in range(config.repeats):
            hook = (_score_dump_hook(config, out_dir / "scores", repeat)
                    if config.dump_scores else None)
            records.append(run_single(config, repeat, row_sink=sink,
                                      query_hook=hook))
        aggregate = aggregate_curves(records)
    write_aggregate_csv(out_dir / "aggregate.csv", aggregate)
    return out_dir


def discover_cells(results_dir) -> list:
    """(cell_dir, model, strategy) for every results.jsonl under results_dir."""
    root = Path(results_dir)
    if not root.exists():
        raise DataError(f"results directory {root} does not exist")
    cells = []
    for results in sorted(root.rglob("results.jsonl")):
        cell_dir = results.parent
        config_path = cell_dir / "config.json"
        if not config_path.exists():
            continue
        with open(config_path) as fh:
            doc = json.load(fh)
        cells.append((cell_dir, doc["model"], doc["strategy"]))
    if not cells:
        raise DataError(f"no results found under {root}")
    return cells


def load_cell_rows(cell_dir) -> list:
    rows = []
    with open(Path(cell_dir) / "results.jsonl") as fh:
        for line in fh:
            line = line.strip()
            if line:
                rows.append(json.loads(line))
    return rows


def cell_curves(rows) -> dict:
    """Per-repeat LearningCurve from persisted rows."""
    by_repeat = {}
    for row in rows:
        by_repeat.setdefault(row["repeat"], []).append(row)
    curves = {}
    for repeat, items in by_repeat.items():
        items = sorted(items, key=lambda r: r["cost"])
        curves[repeat] = LearningCurve([r["cost"] for r in items],
                                       [r["micro_acc"] for r in items])
    return curves


def cell_aulcs(rows) -> list:
    curves = cell_curves(rows)
    return [aulc(curves[r]) for r in sorted(curves)]
