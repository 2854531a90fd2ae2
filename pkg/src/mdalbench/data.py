"""Multi-domain classification pools.

A pool holds K domains with a common feature dimension and class set. Each
domain is partitioned into train/val/test; the train partition carries a
labeled mask that the active-learning loop grows over time. Training code
reads labels only through labeled_arrays(), so labels of still-unlabeled
instances are never visible to it.
"""

import csv
import json
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from mdalbench.errors import DataError, ShapeError


@dataclass
class Domain:
    name: str
    train_x: np.ndarray
    train_y: np.ndarray
    val_x: np.ndarray
    val_y: np.ndarray
    test_x: np.ndarray
    test_y: np.ndarray
    labeled: np.ndarray  # bool mask over train rows

    @property
    def n_train(self) -> int:
        return self.train_x.shape[0]

    def copy(self) -> "Domain":
        return Domain(self.name, self.train_x.copy(), self.train_y.copy(),
                      self.val_x.copy(), self.val_y.copy(),
                      self.test_x.copy(), self.test_y.copy(),
                      self.labeled.copy())


@dataclass
class MultiDomainPool:
    domains: list
    n_classes: int
    conflict_log: list = field(default_factory=list)

    @property
    def n_domains(self) -> int:
        return len(self.domains)

    @property
    def feature_dim(self) -> int:
        return self.domains[0].train_x.shape[1]

    def copy(self) -> "MultiDomainPool":
        return MultiDomainPool([d.copy() for d in self.domains], self.n_classes,
                               list(self.conflict_log))

    def labeled_cost(self) -> int:
        return int(sum(d.labeled.sum() for d in self.domains))

    def unlabeled_count(self) -> int:
        return int(sum((~d.labeled).sum() for d in self.domains))

    def labeled_arrays(self, k: int):
        """Features and labels of the labeled train instances of domain k."""
        d = self.domains[k]
        return d.train_x[d.labeled], d.train_y[d.labeled]

    def unlabeled_features(self, k: int) -> np.ndarray:
        """Features only; unlabeled ground truth stays hidden."""
        d = self.domains[k]
        return d.train_x[~d.labeled]

    def unlabeled_indices(self, k: int) -> np.ndarray:
        return np.flatnonzero(~self.domains[k].labeled)

    def unlabeled_handles(self):
        """All (domain, index) handles, ascending in both components."""
        handles = []
        for k in range(self.n_domains):
            handles.extend((k, int(i)) for i in self.unlabeled_indices(k))
        return handles

    def validate(self):
        dim = self.feature_dim
        for d in self.domains:
            for x in (d.train_x, d.val_x, d.test_x):
                if x.shape[0] and x.shape[1] != dim:
                    raise DataError(f"domain {d.name!r}: feature dim {x.shape[1]} != {dim}")
            for y in (d.train_y, d.val_y, d.test_y):
                if y.size and (y.min() < 0 or y.max() >= self.n_classes):
                    raise DataError(f"domain {d.name!r}: label outside [0, {self.n_classes})")
            if d.labeled.shape != (d.n_train,):
                raise DataError(f"domain {d.name!r}: labeled mask misaligned with train rows")


@dataclass
class QuerySet:
    """Batch of unlabeled (domain, index) handles picked in one iteration."""

    handles: list
    b: int

    def __post_init__(self):
        if len(set(self.handles)) != len(self.handles):
            raise DataError("query handles must be distinct")

    def __len__(self) -> int:
        return len(self.handles)


@dataclass
class SyntheticSpec:
    """Gaussian-blob generator with per-domain mean shifts.

    Domain k's class-c mean is rotate_k(base_means[c] + shifts[k]), where
    rotate_k is an optional per-domain orthogonal map whose distance from the
    identity grows with `rotation` (0 disables it). A conflict_fraction > 0
    injects instances whose features are identical across domains but whose
    labels differ (per-domain class derangement), emulating cross-domain
    label conflicts.
    """

    n_domains: int = 3
    n_classes: int = 4
    dim: int = 20
    samples_per_domain: int = 750
    noise: float = 1.0
    shift_norm: float = 2.0
    class_separation: float = 3.0
    conflict_fraction: float = 0.0
    rotation: float = 0.0
    base_means: np.ndarray | None = None
    shifts: np.ndarray | None = None

    def __post_init__(self):
        if self.n_domains < 2:
            raise ValueError("need at least two domains")
        if not 0.0 <= self.conflict_fraction < 1.0:
            raise ValueError("conflict fraction must lie in [0, 1)")
        if self.rotation < 0.0:
            raise ValueError("rotation strength must be >= 0")


def _balanced_labels(n: int, n_classes: int) -> np.ndarray:
    """Class labels with per-class counts within 1 of n / n_classes."""
    base = n // n_classes
    extra = n % n_classes
    counts = [base + (1 if c < extra else 0) for c in range(n_classes)]
    return np.repeat(np.arange(n_classes), counts)


def _derangement(n: int, rng: np.random.Generator) -> np.ndarray:
    """Permutation of range(n) with no fixed points."""
    if n < 2:
        raise ValueError("derangement needs at least 2 classes")
    while True:
        perm = rng.permutation(n)
        if not np.any(perm == np.arange(n)):
            return perm


def _cayley_rotation(dim: int, strength: float, rng: np.random.Generator) -> np.ndarray:
    """Random orthogonal map (I - tS)(I + tS)^-1, S skew; identity at t = 0."""
    a = rng.normal(size=(dim, dim)) / np.sqrt(dim)
    s = (a - a.T) / 2.0
    eye = np.eye(dim)
    return (eye - strength * s) @ np.linalg.inv(eye + strength * s)


def generate_synthetic(spec: SyntheticSpec, rng: np.random.Generator) -> MultiDomainPool:
    """Build an unsplit pool (everything in train, nothing labeled)."""
    if spec.noise <= 0:
        raise ValueError("noise scale must be positive")
    c, d, k = spec.n_classes, spec.dim, spec.n_domains

    means = spec.base_means
    if means is None:
        means = rng.normal(size=(c, d))
        means *= spec.class_separation / np.linalg.norm(means, axis=1, keepdims=True)
    shifts = spec.shifts
    if shifts is None:
        shifts = rng.normal(size=(k, d))
        shifts *= spec.shift_norm / np.linalg.norm(shifts, axis=1, keepdims=True)
    rotations = None
    if spec.rotation > 0.0:
        rotations = [_cayley_rotation(d, spec.rotation, rng) for _ in range(k)]

    n = spec.samples_per_domain
    n_conflict = int(round(spec.conflict_fraction * n))
    n_regular = n - n_conflict

    # Conflict prototypes are drawn once (around the unshifted base means) and
    # reused verbatim in every domain so identical features can carry
    # conflicting labels.
    conflict_y = _balanced_labels(n_conflict, c)
    conflict_x = means[conflict_y] + spec.noise * rng.normal(size=(n_conflict, d))
    derangements = [None] + [_derangement(c, rng) for _ in range(k - 1)]

    domains = []
    conflict_log = []
    per_domain_conflict_labels = []
    for j in range(k):
        y = _balanced_labels(n_regular, c)
        centers = means[y] + shifts[j]
        if rotations is not None:
            centers = centers @ rotations[j].T
        x = centers + spec.noise * rng.normal(size=(n_regular, d))
        if n_conflict:
            cy = conflict_y if derangements[j] is None else derangements[j][conflict_y]
            x = np.vstack([x, conflict_x])
            y = np.concatenate([y, cy])
            per_domain_conflict_labels.append(cy)
        empty_x = np.empty((0, d))
        empty_y = np.empty(0, dtype=np.int64)
        domains.append(Domain(f"domain{j}", x, y.astype(np.int64),
                              empty_x.copy(), empty_y.copy(),
                              empty_x.copy(), empty_y.copy(),
                              np.zeros(n, dtype=bool)))
    for i in range(n_conflict):
        conflict_log.append({
            "slot": n_regular + i,
            "base_label": int(conflict_y[i]),
            "domain_labels": [int(per_domain_conflict_labels[j][i]) for j in range(k)],
        })
    return MultiDomainPool(domains, c, conflict_log)


def _read_csv_domain(path: Path):
    """Rows of (features..., label); header skipped if non-numeric."""
    rows = []
    with open(path, newline="") as fh:
        for row in csv.reader(fh):
            if not row:
                continue
            try:
                rows.append([float(v) for v in row])
            except ValueError:
                if rows:
                    raise DataError(f"{path}: non-numeric row after data started")
                continue  # header line
    if not rows:
        raise DataError(f"{path}: no data rows")
    arr = np.asarray(rows, dtype=np.float64)
    x, y = arr[:, :-1], arr[:, -1]
    if not np.all(y == np.round(y)):
        raise DataError(f"{path}: label column must hold integers")
    return x, y.astype(np.int64)


def load_manifest(manifest) -> MultiDomainPool:
    """Load a pool from a JSON manifest: {"domains": [{"name","path"}], "classes": C}.

    Paths are resolved relative to the manifest file. Dimension or label
    mismatches raise DataError naming the offending domain.
    """
    base = Path(".")
    if isinstance(manifest, (str, Path)):
        base = Path(manifest).parent
        with open(manifest) as fh:
            manifest = json.load(fh)
    n_classes = int(manifest["classes"])
    domains = []
    dim = None
    for entry in manifest["domains"]:
        name = entry["name"]
        path = Path(entry["path"])
        if not path.is_absolute():
            path = base / path
        if not path.exists():
            raise DataError(f"domain {name!r}: file not found: {path}")
        x, y = _read_csv_domain(path)
        if dim is None:
            dim = x.shape[1]
        elif x.shape[1] != dim:
            raise DataError(
                f"domain {name!r}: feature dim {x.shape[1]} != {dim} of earlier domains")
        if y.size and (y.min() < 0 or y.max() >= n_classes):
            raise DataError(f"domain {name!r}: label outside [0, {n_classes})")
        empty_x = np.empty((0, dim))
        empty_y = np.empty(0, dtype=np.int64)
        domains.append(Domain(name, x, y, empty_x.copy(), empty_y.copy(),
                              empty_x.copy(), empty_y.copy(),
                              np.zeros(x.shape[0], dtype=bool)))
    if len(domains) < 2:
        raise DataError("manifest must declare at least two domains")
    pool = MultiDomainPool(domains, n_classes)
    pool.validate()
    return pool


def export_pool(pool: MultiDomainPool, directory) -> Path:
    """Write one CSV per domain plus a manifest; returns the manifest path."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    entries = []
    for d in pool.domains:
        x = np.vstack([d.train_x, d.val_x, d.test_x])
        y = np.concatenate([d.train_y, d.val_y, d.test_y])
        path = directory / f"{d.name}.csv"
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            for row, label in zip(x, y):
                writer.writerow([repr(float(v)) for v in row] + [int(label)])
        entries.append({"name": d.name, "path": path.name})
    manifest_path = directory / "manifest.json"
    with open(manifest_path, "w") as fh:
        json.dump({"domains": entries, "classes": pool.n_classes}, fh, indent=2)
    return manifest_path


def _partition_sizes(n: int, ratios) -> list:
    """Largest-remainder split of n into len(ratios) parts."""
    exact = [n * r for r in ratios]
    sizes = [int(np.floor(e)) for e in exact]
    order = sorted(range(len(ratios)), key=lambda i: (-(exact[i] - sizes[i]), i))
    for i in order[: n - sum(sizes)]:
        sizes[i] += 1
    return sizes


def _stratified_sizes(class_counts, ratios):
    """Per-class partition sizes whose totals hit the global targets exactly.

    Starts from per-class largest-remainder allocations, then moves single
    units between partitions (always from the class rounded up the most
    toward the one rounded down the most) until the per-partition totals
    equal the global largest-remainder sizes.
    """
    targets = _partition_sizes(sum(class_counts), ratios)
    exact = [[count * r for r in ratios] for count in class_counts]
    alloc = [_partition_sizes(count, ratios) for count in class_counts]
    totals = [sum(a[p] for a in alloc) for p in range(len(ratios))]
    while totals != targets:
        p_over = next(p for p in range(len(ratios)) if totals[p] > targets[p])
        p_under = next(p for p in range(len(ratios)) if totals[p] < targets[p])
        c = max(range(len(class_counts)),
                key=lambda c: (alloc[c][p_over] - exact[c][p_over])
                - (alloc[c][p_under] - exact[c][p_under])
                if alloc[c][p_over] > 0 else -np.inf)
        alloc[c][p_over] -= 1
        alloc[c][p_under] += 1
        totals[p_over] -= 1
        totals[p_under] += 1
    return alloc


def split_pool(pool: MultiDomainPool, ratios, rng: np.random.Generator) -> MultiDomainPool:
    """Per-domain stratified train/val/test partition.

    Operates on the union of the current partitions, so it can re-split an
    already-split pool. A class with fewer instances than partitions falls
    back to an unstratified split for that domain, with a warning.
    """
    ratios = tuple(float(r) for r in ratios)
    if len(ratios) != 3 or any(r < 0 for r in ratios) or ratios[0] <= 0:
        raise ValueError("ratios must be three nonnegative values with train > 0")
    if abs(sum(ratios) - 1.0) > 1e-9:
        raise ValueError("ratios must sum to 1")
    n_parts = sum(1 for r in ratios if r > 0)

    out = []
    for d in pool.domains:
        x = np.vstack([d.train_x, d.val_x, d.test_x])
        y = np.concatenate([d.train_y, d.val_y, d.test_y])
        n = x.shape[0]
        class_counts = np.bincount(y, minlength=pool.n_classes)
        stratify = np.all(class_counts[class_counts > 0] >= n_parts)
        if not stratify:
            warnings.warn(
                f"domain {d.name!r}: a class has fewer instances than partitions; "
                "splitting unstratified")
            parts = [[], [], []]
            perm = rng.permutation(n)
            sizes = _partition_sizes(n, ratios)
            start = 0
            for p, size in enumerate(sizes):
                parts[p] = perm[start:start + size]
                start += size
        else:
            class_ids = [c for c in range(pool.n_classes) if class_counts[c] > 0]
            alloc = _stratified_sizes([class_counts[c] for c in class_ids], ratios)
            parts = [[], [], []]
            for sizes, c in zip(alloc, class_ids):
                idx = np.flatnonzero(y == c)
                perm = idx[rng.permutation(idx.size)]
                start = 0
                for p, size in enumerate(sizes):
                    parts[p].append(perm[start:start + size])
                    start += size
            parts = [np.concatenate(p) if p else np.empty(0, dtype=np.int64)
                     for p in parts]
        tr, va, te = (np.sort(np.asarray(p, dtype=np.int64)) for p in parts)
        out.append(Domain(d.name, x[tr], y[tr], x[va], y[va], x[te], y[te],
                          np.zeros(tr.size, dtype=bool)))
    return MultiDomainPool(out, pool.n_classes, list(pool.conflict_log))


def reveal_labels(pool: MultiDomainPool, query: QuerySet) -> MultiDomainPool:
    """Simulated oracle: move the queried handles into the labeled mask."""
    for k, i in query.handles:
        d = pool.domains[k]
        if not 0 <= i < d.n_train:
            raise DataError(f"handle ({k}, {i}) outside domain train pool")
        if d.labeled[i]:
            raise DataError(f"handle ({k}, {i}) is already labeled")
        d.labeled[i] = True
    return pool
