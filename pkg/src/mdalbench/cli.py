"""Command-line surface: run, sweep, report, plot, selftest.

Exit codes: 0 ok, 1 configuration error, 2 runtime error.
"""

import argparse
import json
import os
import sys
import traceback
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from mdalbench.acquisition import STRATEGY_KINDS
from mdalbench.config import load_config_doc
from mdalbench.errors import ConfigError, MdalError
from mdalbench.models.graph import ARCHITECTURE_KINDS
from mdalbench.store import (
    cell_aulcs,
    discover_cells,
    ensure_outdir,
    load_cell_rows,
    run_cell,
)


def _default_workers() -> int:
    try:
        return max(1, int(os.environ.get("MDAL_WORKERS", "1")))
    except ValueError:
        return 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mdalbench",
        description="Multi-domain active learning benchmark harness")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, with_workers=False):
        p.add_argument("--config", type=Path, help="JSON experiment config")
        p.add_argument("--preset", help="named preset expanded before the config")
        p.add_argument("--out", type=Path, help="output directory")
        p.add_argument("--force", action="store_true",
                       help="replace a non-empty output directory")
        p.add_argument("--seed", type=int, help="override the base seed")
        p.add_argument("--models", help="comma-separated architecture list")
        p.add_argument("--strategies", help="comma-separated strategy list")
        if with_workers:
            p.add_argument("--workers", type=int, default=_default_workers(),
                           help="parallel sweep cells (MDAL_WORKERS)")

    p_run = sub.add_parser("run", help="execute one model-strategy cell")
    common(p_run)
    p_run.set_defaults(func=cmd_run)

    p_sweep = sub.add_parser("sweep", help="execute a model x strategy grid")
    common(p_sweep, with_workers=True)
    p_sweep.set_defaults(func=cmd_sweep)

    p_report = sub.add_parser("report", help="AULC table from a results directory")
    p_report.add_argument("results_dir", type=Path)
    p_report.set_defaults(func=cmd_report)

    p_plot = sub.add_parser("plot", help="curve CSVs and SVG figures")
    p_plot.add_argument("results_dir", type=Path)
    p_plot.set_defaults(func=cmd_plot)

    p_self = sub.add_parser("selftest", help="run the verification suite")
    p_self.add_argument("--full", action="store_true",
                        help="include the slow trend checks")
    p_self.set_defaults(func=cmd_selftest)
    return parser


def _resolve_doc(args) -> dict:
    raw = {}
    if args.config is not None:
        with open(args.config) as fh:
            try:
                raw = json.load(fh)
            except json.JSONDecodeError as exc:
                raise ConfigError(f"{args.config}: invalid JSON ({exc})") from exc
        if not isinstance(raw, dict):
            raise ConfigError(f"{args.config}: config must be a JSON object")
    if args.preset:
        raw["preset"] = args.preset
    if not raw:
        raise ConfigError("nothing to run: pass --config and/or --preset")
    doc = load_config_doc(raw)
    if args.seed is not None:
        doc["seed"] = args.seed
    return doc


def _out_dir(args, doc) -> Path:
    out = args.out or doc.get("out")
    if out is None:
        raise ConfigError("no output directory: pass --out or set 'out' in the config")
    return ensure_outdir(out, args.force)


def _split_csv(value, allowed, what):
    names = [v.strip() for v in value.split(",") if v.strip()]
    for name in names:
        if name not in allowed:
            raise ConfigError(f"unknown {what} {name!r}; choose from {list(allowed)}")
    if not names:
        raise ConfigError(f"empty {what} list")
    return names


def cmd_run(args) -> int:
    doc = _resolve_doc(args)
    model = doc.get("model")
    strategy = doc.get("strategy")
    if args.models:
        (model,) = _split_csv(args.models, ARCHITECTURE_KINDS, "model")
    if args.strategies:
        (strategy,) = _split_csv(args.strategies, STRATEGY_KINDS, "strategy")
    if not model or not strategy:
        raise ConfigError("run needs a model and a strategy "
                          "(config keys or --models/--strategies)")
    out = _out_dir(args, doc)
    run_cell(doc, model, strategy, out)
    print(f"wrote {out}/results.jsonl")
    return 0


def _cell_task(doc, model, strategy, cell_dir):
    run_cell(doc, model, strategy, cell_dir)
    return f"{model}__{strategy}"


def cmd_sweep(args) -> int:
    doc = _resolve_doc(args)
    models = (_split_csv(args.models, ARCHITECTURE_KINDS, "model")
              if args.models else list(ARCHITECTURE_KINDS))
    strategies = (_split_csv(args.strategies, STRATEGY_KINDS, "strategy")
                  if args.strategies else list(STRATEGY_KINDS))
    out = _out_dir(args, doc)
    with open(out / "sweep-config.json", "w") as fh:
        json.dump({"models": models, "strategies": strategies,
                   "workers": args.workers}, fh, indent=2)
        fh.write("\n")

    cells = [(model, strategy) for model in models for strategy in strategies]
    failures = []
    if args.workers <= 1:
        for model, strategy in cells:
            try:
                _cell_task(doc, model, strategy, out / "cells" / f"{model}__{strategy}")
                print(f"done {model}__{strategy}")
            except Exception as exc:  # keep completed cells
                failures.append((model, strategy, exc))
                print(f"FAILED {model}__{strategy}: {exc}", file=sys.stderr)
    else:
        with ProcessPoolExecutor(max_workers=args.workers) as pool:
            futures = {
                pool.submit(_cell_task, doc, model, strategy,
                            out / "cells" / f"{model}__{strategy}"): (model, strategy)
                for model, strategy in cells}
            for future, (model, strategy) in futures.items():
                try:
                    print(f"done {future.result()}")
                except Exception as exc:
                    failures.append((model, strategy, exc))
                    print(f"FAILED {model}__{strategy}: {exc}", file=sys.stderr)
    if failures:
        return 2
    print(f"wrote {len(cells)} cells under {out}/cells")
    return 0


def cmd_report(args) -> int:
    from mdalbench.metrics import render_report_csv, render_report_text, report_table

    cells = discover_cells(args.results_dir)
    aulcs = {}
    for cell_dir, model, strategy in cells:
        aulcs[(strategy, model)] = cell_aulcs(load_cell_rows(cell_dir))
    table = report_table(aulcs)
    report_dir = Path(args.results_dir) / "report"
    report_dir.mkdir(exist_ok=True)
    (report_dir / "aulc.csv").write_text(render_report_csv(table))
    text = render_report_text(table)
    (report_dir / "aulc.txt").write_text(text)
    print(text, end="")
    return 0


def cmd_plot(args) -> int:
    from mdalbench.plotting import save_curve_figure, save_overview_figure
    from mdalbench.store import write_aggregate_csv

    cells = discover_cells(args.results_dir)
    plots_dir = Path(args.results_dir) / "plots"
    plots_dir.mkdir(exist_ok=True)
    overview = {}
    for cell_dir, model, strategy in cells:
        rows = load_cell_rows(cell_dir)
        by_cost = {}
        for row in rows:
            by_cost.setdefault(row["cost"], []).append(row["micro_acc"])
        import numpy as np

        aggregate = []
        for cost in sorted(by_cost):
            vals = np.asarray(by_cost[cost])
            std = float(vals.std(ddof=1)) if vals.size > 1 else 0.0
            aggregate.append((cost, float(vals.mean()), std))
        name = f"{model}__{strategy}"
        write_aggregate_csv(plots_dir / f"{name}.csv", aggregate)
        save_curve_figure(plots_dir / f"{name}.svg", name, aggregate)
        overview[name] = aggregate
    save_overview_figure(plots_dir / "overview.svg", overview)
    print(f"wrote {len(cells)} curve plots under {plots_dir}")
    return 0


def cmd_selftest(args) -> int:
    from mdalbench.selftest import run_selftest

    return run_selftest(full=args.full)


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except MdalError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except Exception:
        traceback.print_exc()
        return 2


if __name__ == "__main__":
    sys.exit(main())
