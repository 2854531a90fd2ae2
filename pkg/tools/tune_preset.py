"""Scan synthetic-preset candidates against all four trend criteria at once.

Development tool, not part of the package.
"""

import sys
import time

import numpy as np

sys.path.insert(0, "src")

from mdalbench.analysis import ablation_report, batch_diversity
from mdalbench.analysis_probe import (
    private_feature_fn,
    probe_domain_accuracy,
    shared_feature_fn,
)
from mdalbench.config import load_config_doc, make_experiment
from mdalbench.engine import build_pool, run_experiment
from mdalbench.metrics import aulc, curve_from_rows
from mdalbench.models import build_model, fit
from mdalbench.rng import substream
from mdalbench.store import run_cell


def candidate_doc(synth, **train):
    doc = load_config_doc({"preset": "synthetic"})
    doc["dataset"]["synthetic"].update(synth)
    doc.update(train)
    return doc


def crit7(doc):
    out = {}
    for strat in ("uncertainty", "random"):
        config = make_experiment(dict(doc, repeats=10), "man", strat)
        records, _ = run_experiment(config)
        out[strat] = np.array([aulc(curve_from_rows(r.rows)) for r in records])
    gaps = out["uncertainty"] - out["random"]
    return gaps.mean(), gaps.min()


def crit8(doc):
    config = make_experiment(dict(doc, repeats=5), "man", "uncertainty")
    rep = ablation_report(config)
    g_first = rep.whole.values[0] - rep.shared_only.values[0]
    g_final = rep.whole.values[-1] - rep.shared_only.values[-1]
    return g_first, g_final


def crit9(doc):
    man_a, sep_a = [], []
    for seed in range(5):
        config = make_experiment(dict(doc, seed=seed), "man", "random")
        pool = build_pool(config)
        for d in pool.domains:
            d.labeled[:] = True
        for kind, accs, feats in (("man", man_a, shared_feature_fn),
                                  ("sdl-separate", sep_a, private_feature_fn)):
            m = build_model(kind, pool.feature_dim, config.hidden_dim,
                            pool.n_classes, pool.n_domains, config.lam,
                            substream(seed, "pf/" + kind))
            fit(m, pool, config.train, substream(seed, "pt/" + kind))
            accs.append(probe_domain_accuracy(feats(m), pool, seed))
    return float(np.mean(man_a)), float(np.mean(sep_a))


def crit10(doc):
    config = make_experiment(doc, "man", "uncertainty")
    result = batch_diversity(config, ("uncertainty", "badge"), repeats=5)
    return result["uncertainty"][0], result["badge"][0]


def evaluate(name, synth, train, skip=()):
    doc = candidate_doc(synth, **train)
    print(f"== {name}")
    t0 = time.perf_counter()
    if 7 not in skip:
        gap, gmin = crit7(doc)
        print(f"  c7 AULC gap {gap:+.4f} (min {gmin:+.4f})  "
              f"{'OK' if gap >= 0.01 else 'FAIL'}")
    if 8 not in skip:
        g_first, g_final = crit8(doc)
        print(f"  c8 gap first {g_first:+.4f} final {g_final:+.4f}  "
              f"{'OK' if g_final >= g_first else 'FAIL'}")
    if 9 not in skip:
        man_p, sep_p = crit9(doc)
        print(f"  c9 probe man {man_p:.3f} sep {sep_p:.3f}  "
              f"{'OK' if man_p <= sep_p - 0.05 else 'FAIL'}")
    if 10 not in skip:
        unc_k, badge_k = crit10(doc)
        print(f"  c10 k* unc {unc_k:.1f} badge {badge_k:.1f}  "
              f"{'OK' if unc_k >= 0.5 * badge_k else 'WARN'}")
    print(f"  ({time.perf_counter() - t0:.0f}s)")


if __name__ == "__main__":
    base_synth = dict(class_separation=4.0, samples_per_domain=1500)
    base_train = dict(learning_rate=1e-2, patience=15, max_epochs=200,
                      hidden_dim=32, split=[0.4, 0.1, 0.5])
    for rot in (0.0, 0.1, 0.2, 0.3):
        evaluate(f"rot={rot}", dict(base_synth, rotation=rot), base_train)
