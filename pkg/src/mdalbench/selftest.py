"""Executable verification suite behind the `selftest` CLI command.

Each check pins one acceptance property against an independent oracle
(finite differences, brute-force search, explicit backward passes, closed
identities) or a scaled-down trend reproduction. The diversity check is a
soft diagnostic: it warns instead of failing.
"""

import math
import tempfile
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from mdalbench import rng as rngmod
from mdalbench.acquisition import score_egl, select_coreset
from mdalbench.analysis import ablation_report, batch_diversity
from mdalbench.analysis_probe import (
    private_feature_fn,
    probe_domain_accuracy,
    shared_feature_fn,
)
from mdalbench.config import load_config_doc, make_experiment
from mdalbench.data import QuerySet
from mdalbench.engine import build_pool, with_overrides
from mdalbench.metrics import LearningCurve, aulc
from mdalbench.models import (
    badge_gradient_embedding,
    build_model,
    check_model_gradients,
    fit,
    forward_predict,
    supervised_loss,
    zero_grad,
)
from mdalbench.store import cell_aulcs, load_cell_rows, run_cell


@dataclass
class CheckResult:
    name: str
    passed: bool
    detail: str
    soft: bool = False

    @property
    def line(self) -> str:
        tag = "PASS" if self.passed else ("WARN" if self.soft else "FAIL")
        return f"[{tag}] {self.name}: {self.detail}"


def _synthetic_doc(**overrides) -> dict:
    doc = load_config_doc({"preset": "synthetic"})
    doc.update(overrides)
    return doc


def check_gradients() -> CheckResult:
    """Criterion 1: finite-difference check of the total loss, six architectures."""
    d, h, c, k = 7, 5, 3, 3
    rng = rngmod.substream(42, "selftest/gradcheck")
    x = rng.normal(size=(6, d))
    y = rng.integers(0, c, size=6)
    doms = rng.integers(0, k, size=6)
    adv_x = rng.normal(size=(9, d))
    adv_d = np.repeat(np.arange(k), 3)
    adv_y = rng.integers(0, c, size=9)
    adv_m = rng.random(9) < 0.5
    started = time.perf_counter()
    worst = 0.0
    for kind in ("sdl-joint", "sdl-separate", "dann", "mdnet", "man", "can"):
        model = build_model(kind, d, h, c, k, 0.1, rngmod.substream(1, kind))
        err = check_model_gradients(model, x, y, doms, adv_x, adv_d, adv_y,
                                    adv_m, eps=1e-5)
        worst = max(worst, err)
    elapsed = time.perf_counter() - started
    return CheckResult(
        "gradient correctness",
        worst < 1e-5 and elapsed < 10.0,
        f"max relative error {worst:.2e} (< 1e-5), {elapsed:.1f}s (< 10s)")


def _brute_force_coreset(labeled, unlabeled, handles, b):
    """Exhaustive furthest-first reference, pure Python."""
    centers = [tuple(p) for p in labeled]
    chosen = []
    remaining = list(range(len(handles)))
    for _ in range(min(b, len(remaining))):
        best = None
        for i in remaining:
            if centers:
                dmin = min(math.dist(unlabeled[i], c) for c in centers)
            else:
                dmin = math.inf
            key = (-dmin, handles[i])
            if best is None or key < best[0]:
                best = (key, i)
        i = best[1]
        chosen.append(handles[i])
        centers.append(tuple(unlabeled[i]))
        remaining.remove(i)
    return chosen


def check_coreset_oracle() -> CheckResult:
    """Criterion 2: select_coreset matches brute-force furthest-first search."""
    rng = rngmod.substream(7, "selftest/coreset")
    started = time.perf_counter()
    for trial in range(50):
        n0 = int(rng.integers(2, 11))
        n1 = int(rng.integers(2, 11))
        dim = int(rng.integers(1, 4))
        unlabeled = rng.normal(size=(n0 + n1, dim))
        handles = [(0, i) for i in range(n0)] + [(1, i) for i in range(n1)]
        n_lab = int(rng.integers(0, 4))
        labeled = rng.normal(size=(n_lab, dim))
        b = int(rng.integers(1, n0 + n1 + 1))
        got = select_coreset(labeled, unlabeled, handles, b).handles
        want = _brute_force_coreset(labeled, unlabeled, handles, b)
        if got != want:
            return CheckResult("coreset oracle", False,
                               f"trial {trial}: {got} != {want}")
    elapsed = time.perf_counter() - started
    return CheckResult("coreset oracle", elapsed < 5.0,
                       f"50/50 pools exact, {elapsed:.1f}s (< 5s)")


def check_egl_oracle() -> CheckResult:
    """Criterion 3: closed-form EGL equals per-class explicit backward passes."""
    rng = rngmod.substream(11, "selftest/egl")
    worst = 0.0
    for _ in range(100):
        kind = ("sdl-joint", "mdnet", "man")[int(rng.integers(3))]
        model = build_model(kind, 6, 4, 3, 2, 0.1,
                            rngmod.substream(int(rng.integers(1 << 30)), "m"))
        x = rng.normal(size=(1, 6))
        k = int(rng.integers(2))
        trace = forward_predict(model, x, k)
        closed = float(score_egl(trace.probs, trace.penultimate)[0])
        head = model.classifier_for(k)
        total = 0.0
        for y in range(model.n_classes):
            zero_grad(model)
            supervised_loss(model, x, np.array([y]), np.array([k]))
            norm = math.sqrt(float((head.dw ** 2).sum() + (head.db ** 2).sum()))
            total += float(trace.probs[0, y]) * norm
        worst = max(worst, abs(closed - total))
    return CheckResult("egl oracle", worst < 1e-10,
                       f"max |closed-form - backward sum| = {worst:.2e} (< 1e-10)")


def check_badge_oracle() -> CheckResult:
    """Criterion 4: badge embedding equals the finite-difference last-layer
    gradient at the hypothetical (argmax) label."""
    rng = rngmod.substream(13, "selftest/badge")
    eps = 1e-6
    worst = 0.0
    for _ in range(20):
        kind = ("sdl-joint", "man", "sdl-separate")[int(rng.integers(3))]
        model = build_model(kind, 5, 4, 3, 2, 0.1,
                            rngmod.substream(int(rng.integers(1 << 30)), "m"))
        x = rng.normal(size=(1, 5))
        k = int(rng.integers(2))
        emb = badge_gradient_embedding(model, x, k)[0]
        trace = forward_predict(model, x, k)
        y_hat = int(trace.probs[0].argmax())
        head = model.classifier_for(k)

        def ce():
            logits = forward_predict(model, x, k).logits[0]
            shifted = logits - logits.max()
            return float(-shifted[y_hat] + np.log(np.exp(shifted).sum()))

        fd_w = np.zeros_like(head.w)
        for i in range(head.w.shape[0]):
            for j in range(head.w.shape[1]):
                orig = head.w[i, j]
                head.w[i, j] = orig + eps
                up = ce()
                head.w[i, j] = orig - eps
                down = ce()
                head.w[i, j] = orig
                fd_w[i, j] = (up - down) / (2 * eps)
        fd_b = np.zeros_like(head.b)
        for j in range(head.b.size):
            orig = head.b[j]
            head.b[j] = orig + eps
            up = ce()
            head.b[j] = orig - eps
            down = ce()
            head.b[j] = orig
            fd_b[j] = (up - down) / (2 * eps)

        want = np.concatenate([fd_w.T.ravel(), fd_b])  # class-major, then bias
        worst = max(worst, float(np.abs(emb - want).max()))
    return CheckResult("badge embedding oracle", worst < 1e-6,
                       f"max |embedding - fd gradient| = {worst:.2e} (< 1e-6)")


def check_aulc_identities() -> CheckResult:
    """Criterion 5: closed-form AULC values."""
    constant = aulc(LearningCurve([0, 50, 100], [0.8, 0.8, 0.8]))
    linear = aulc(LearningCurve([10, 20, 30], [0.0, 0.5, 1.0]))
    threept = aulc(LearningCurve([0, 1, 2], [0.5, 0.5, 1.0]))
    ok = constant == 0.8 and linear == 0.5 and threept == 0.625
    return CheckResult("aulc identities", ok,
                       f"constant={constant:.6f} linear={linear} three-point={threept}")


def check_determinism() -> CheckResult:
    """Criterion 6: identical config + seed gives byte-identical results."""
    doc = _synthetic_doc(budget=100, initial_labeled=40, al_batch_size=30,
                         repeats=2, max_epochs=15)
    doc["dataset"]["synthetic"]["samples_per_domain"] = 120
    with tempfile.TemporaryDirectory() as tmp:
        a = run_cell(doc, "man", "uncertainty", Path(tmp) / "a")
        b = run_cell(doc, "man", "uncertainty", Path(tmp) / "b")
        bytes_a = (a / "results.jsonl").read_bytes()
        bytes_b = (b / "results.jsonl").read_bytes()
    return CheckResult("run determinism", bytes_a == bytes_b,
                       f"results.jsonl byte-identical across runs "
                       f"({len(bytes_a)} bytes)")


def check_al_benefit() -> CheckResult:
    """Criterion 7: uncertainty beats random with the man model on the
    synthetic preset by >= 0.01 mean AULC."""
    doc = _synthetic_doc()
    started = time.perf_counter()
    with tempfile.TemporaryDirectory() as tmp:
        scores = {}
        for strategy in ("uncertainty", "random"):
            cell = run_cell(doc, "man", strategy, Path(tmp) / strategy)
            scores[strategy] = float(np.mean(cell_aulcs(load_cell_rows(cell))))
    elapsed = time.perf_counter() - started
    gap = scores["uncertainty"] - scores["random"]
    return CheckResult(
        "al benefit trend", gap >= 0.01 and elapsed < 300.0,
        f"mean AULC uncertainty {scores['uncertainty']:.4f} vs random "
        f"{scores['random']:.4f}, gap {gap:+.4f} (>= 0.01), {elapsed:.0f}s (< 300s)")


def check_share_private_trend() -> CheckResult:
    """Criterion 8: the whole-vs-shared accuracy gap grows over the run."""
    config = make_experiment(_synthetic_doc(repeats=5), "man", "uncertainty")
    report = ablation_report(config)
    gap_first = report.whole.values[0] - report.shared_only.values[0]
    gap_final = report.whole.values[-1] - report.shared_only.values[-1]
    return CheckResult(
        "share-private trend", gap_final >= gap_first,
        f"whole-shared gap first {gap_first:+.4f} -> final {gap_final:+.4f} "
        f"(5 repeats)")


def check_domain_invariance() -> CheckResult:
    """Criterion 9: a domain probe on man's shared features scores at least
    0.05 below the same probe on sdl-separate's per-domain features."""
    man_accs, sep_accs = [], []
    for seed in range(5):
        config = make_experiment(_synthetic_doc(seed=seed), "man", "random")
        pool = build_pool(config)
        for d in pool.domains:
            d.labeled[:] = True
        for kind, accs, feats in (("man", man_accs, shared_feature_fn),
                                  ("sdl-separate", sep_accs, private_feature_fn)):
            model = build_model(kind, pool.feature_dim, config.hidden_dim,
                                pool.n_classes, pool.n_domains, config.lam,
                                rngmod.substream(seed, f"probe-fit/{kind}"))
            fit(model, pool, config.train,
                rngmod.substream(seed, f"probe-train/{kind}"))
            accs.append(probe_domain_accuracy(feats(model), pool, seed))
    man_mean = float(np.mean(man_accs))
    sep_mean = float(np.mean(sep_accs))
    return CheckResult(
        "domain-invariance proxy", man_mean <= sep_mean - 0.05,
        f"probe accuracy man-shared {man_mean:.3f} vs sdl-separate "
        f"{sep_mean:.3f} (gap >= 0.05, 5 seeds)")


def check_batch_diversity() -> CheckResult:
    """Criterion 10 (soft): uncertainty's first-batch elbow k* stays within
    half of badge's."""
    config = make_experiment(_synthetic_doc(), "man", "uncertainty")
    result = batch_diversity(config, ("uncertainty", "badge"), repeats=5)
    unc = result["uncertainty"][0]
    badge = result["badge"][0]
    return CheckResult(
        "batch diversity diagnostic", unc >= 0.5 * badge,
        f"mean elbow k* uncertainty {unc:.1f} vs badge {badge:.1f} "
        f"(>= 0.5x, 5 seeds)", soft=True)


FAST_CHECKS = (
    check_gradients,
    check_coreset_oracle,
    check_egl_oracle,
    check_badge_oracle,
    check_aulc_identities,
    check_determinism,
)

TREND_CHECKS = (
    check_al_benefit,
    check_share_private_trend,
    check_domain_invariance,
)


def run_selftest(full: bool = False, out=print) -> int:
    """Run the suite; returns 0 when every hard check passes."""
    checks = list(FAST_CHECKS)
    if full:
        checks.extend(TREND_CHECKS)
    checks.append(check_batch_diversity)
    failed = 0
    for check in checks:
        result = check()
        out(result.line)
        if not result.passed and not result.soft:
            failed += 1
    out(f"{len(checks) - failed}/{len(checks)} checks passed"
        + ("" if full else " (trend checks skipped; use --full)"))
    return 0 if failed == 0 else 2
