import json

import numpy as np
import pytest

from mdalbench.data import (
    MultiDomainPool,
    QuerySet,
    SyntheticSpec,
    export_pool,
    generate_synthetic,
    load_manifest,
    reveal_labels,
    split_pool,
)
from mdalbench.errors import DataError
from mdalbench.rng import substream


def spec(**kw):
    base = dict(n_domains=2, n_classes=3, dim=5, samples_per_domain=120,
                noise=1.0, shift_norm=0.0, class_separation=3.0)
    base.update(kw)
    return SyntheticSpec(**base)


class TestGenerateSynthetic:
    def test_zero_shift_domains_identically_distributed(self):
        pool = generate_synthetic(spec(samples_per_domain=600),
                                  substream(0, "data"))
        for c in range(3):
            means = [d.train_x[d.train_y == c].mean(axis=0) for d in pool.domains]
            n = (pool.domains[0].train_y == 0).sum()
            assert np.linalg.norm(means[0] - means[1]) < 3.0 / np.sqrt(n) * np.sqrt(5) * 2

    def test_near_zero_noise_is_linearly_separable(self):
        # oracle: closed-form least-squares one-hot regression must be perfect
        pool = generate_synthetic(spec(noise=1e-6), substream(1, "data"))
        for d in pool.domains:
            x = np.hstack([d.train_x, np.ones((d.n_train, 1))])
            targets = np.eye(3)[d.train_y]
            coef, *_ = np.linalg.lstsq(x, targets, rcond=None)
            pred = (x @ coef).argmax(axis=1)
            assert (pred == d.train_y).mean() == 1.0

    def test_class_balance_within_one(self):
        pool = generate_synthetic(spec(samples_per_domain=121),
                                  substream(2, "data"))
        for d in pool.domains:
            counts = np.bincount(d.train_y, minlength=3)
            assert counts.max() - counts.min() <= 1

    def test_sigma_must_be_positive(self):
        with pytest.raises(ValueError):
            generate_synthetic(spec(noise=0.0), substream(3, "data"))

    def test_needs_two_domains(self):
        with pytest.raises(ValueError):
            spec(n_domains=1)

    def test_conflicts_share_features_with_different_labels(self):
        pool = generate_synthetic(spec(conflict_fraction=0.1),
                                  substream(4, "data"))
        assert pool.conflict_log
        for entry in pool.conflict_log:
            slot = entry["slot"]
            rows = [d.train_x[slot] for d in pool.domains]
            labels = [int(d.train_y[slot]) for d in pool.domains]
            np.testing.assert_array_equal(rows[0], rows[1])
            assert labels == entry["domain_labels"]
            assert labels[0] != labels[1]  # per-domain derangement flips them

    def test_rotation_preserves_scale(self):
        pool = generate_synthetic(spec(rotation=1.0, samples_per_domain=400),
                                  substream(5, "data"))
        norms = [np.linalg.norm(d.train_x, axis=1).mean() for d in pool.domains]
        assert max(norms) / min(norms) < 1.1  # orthogonal maps keep norms


class TestManifest:
    def write_domains(self, tmp_path, rows_a, rows_b, classes=2):
        for name, rows in (("a", rows_a), ("b", rows_b)):
            with open(tmp_path / f"{name}.csv", "w") as fh:
                fh.write("\n".join(",".join(str(v) for v in row) for row in rows))
        manifest = {"domains": [{"name": "a", "path": "a.csv"},
                                {"name": "b", "path": "b.csv"}],
                    "classes": classes}
        path = tmp_path / "manifest.json"
        path.write_text(json.dumps(manifest))
        return path

    def test_two_csv_domains(self, tmp_path):
        path = self.write_domains(
            tmp_path,
            [[0.0, 1.0, 0], [1.0, 0.0, 1], [0.5, 0.5, 0]],
            [[0.1, 0.9, 1], [0.9, 0.1, 0], [0.4, 0.6, 1]])
        pool = load_manifest(path)
        assert pool.n_domains == 2
        assert [d.n_train for d in pool.domains] == [3, 3]
        assert pool.feature_dim == 2

    def test_header_rows_are_skipped(self, tmp_path):
        (tmp_path / "a.csv").write_text("f0,f1,label\n0.0,1.0,0\n1.0,0.0,1\n")
        (tmp_path / "b.csv").write_text("0.5,0.5,1\n0.25,0.75,0\n")
        manifest = tmp_path / "m.json"
        manifest.write_text(json.dumps(
            {"domains": [{"name": "a", "path": "a.csv"},
                         {"name": "b", "path": "b.csv"}], "classes": 2}))
        pool = load_manifest(manifest)
        assert pool.domains[0].n_train == 2

    def test_dimension_mismatch_names_domain(self, tmp_path):
        path = self.write_domains(
            tmp_path,
            [[0.0, 1.0, 0], [1.0, 0.0, 1]],
            [[0.1, 1]])  # one feature only
        with pytest.raises(DataError, match="'b'"):
            load_manifest(path)

    def test_label_outside_classes_rejected(self, tmp_path):
        path = self.write_domains(
            tmp_path, [[0.0, 1.0, 0], [1.0, 0.0, 5]], [[0.1, 0.2, 1]])
        with pytest.raises(DataError, match="'a'"):
            load_manifest(path)

    def test_round_trip_preserves_matrices(self, tmp_path):
        pool = generate_synthetic(spec(), substream(6, "data"))
        manifest = export_pool(pool, tmp_path / "exported")
        again = load_manifest(manifest)
        for d, e in zip(pool.domains, again.domains):
            np.testing.assert_array_equal(d.train_x, e.train_x)
            np.testing.assert_array_equal(d.train_y, e.train_y)


class TestSplitPool:
    def test_partition_sizes(self):
        pool = generate_synthetic(spec(samples_per_domain=100),
                                  substream(7, "data"))
        out = split_pool(pool, (0.8, 0.1, 0.1), substream(7, "split"))
        for d in out.domains:
            assert d.train_x.shape[0] == 80
            assert d.val_x.shape[0] == 10
            assert d.test_x.shape[0] == 10

    def test_stratification_within_one_per_class(self):
        pool = generate_synthetic(spec(samples_per_domain=120),
                                  substream(8, "data"))
        out = split_pool(pool, (0.5, 0.25, 0.25), substream(8, "split"))
        for d in out.domains:
            for c in range(3):
                total = ((d.train_y == c).sum() + (d.val_y == c).sum()
                         + (d.test_y == c).sum())
                assert abs((d.train_y == c).sum() - 0.5 * total) <= 1

    def test_same_seed_identical_partitions(self):
        pool = generate_synthetic(spec(), substream(9, "data"))
        a = split_pool(pool, (0.8, 0.1, 0.1), substream(9, "split"))
        b = split_pool(pool, (0.8, 0.1, 0.1), substream(9, "split"))
        for da, db in zip(a.domains, b.domains):
            np.testing.assert_array_equal(da.train_x, db.train_x)
            np.testing.assert_array_equal(da.test_y, db.test_y)

    def test_tiny_class_falls_back_unstratified_with_warning(self):
        pool = generate_synthetic(spec(samples_per_domain=120),
                                  substream(10, "data"))
        pool.domains[0].train_y[:] = 0
        pool.domains[0].train_y[0] = 1  # a single instance of class 1
        with pytest.warns(UserWarning, match="unstratified"):
            split_pool(pool, (0.8, 0.1, 0.1), substream(10, "split"))

    def test_invalid_ratios(self):
        pool = generate_synthetic(spec(), substream(11, "data"))
        with pytest.raises(ValueError):
            split_pool(pool, (0.5, 0.2, 0.2), substream(11, "split"))


class TestRevealLabels:
    def make_pool(self):
        pool = generate_synthetic(spec(), substream(12, "data"))
        return split_pool(pool, (0.8, 0.1, 0.1), substream(12, "split"))

    def test_reveal_moves_mask_and_counts(self):
        pool = self.make_pool()
        before = pool.labeled_cost()
        reveal_labels(pool, QuerySet([(0, 3), (1, 5)], 2))
        assert pool.labeled_cost() == before + 2
        assert pool.domains[0].labeled[3]

    def test_double_reveal_rejected(self):
        pool = self.make_pool()
        reveal_labels(pool, QuerySet([(0, 3)], 1))
        with pytest.raises(DataError):
            reveal_labels(pool, QuerySet([(0, 3)], 1))

    def test_revealed_labels_match_ground_truth(self):
        pool = self.make_pool()
        reveal_labels(pool, QuerySet([(0, 3)], 1))
        x, y = pool.labeled_arrays(0)
        np.testing.assert_array_equal(x[0], pool.domains[0].train_x[3])
        assert y[0] == pool.domains[0].train_y[3]

    def test_out_of_range_handle_rejected(self):
        pool = self.make_pool()
        with pytest.raises(DataError):
            reveal_labels(pool, QuerySet([(0, 10_000)], 1))


class TestAccessContract:
    def test_unlabeled_view_exposes_no_labels(self):
        pool = generate_synthetic(spec(), substream(13, "data"))
        pool = split_pool(pool, (0.8, 0.1, 0.1), substream(13, "split"))
        features = pool.unlabeled_features(0)
        assert features.ndim == 2  # features only; no label column or array
        x, y = pool.labeled_arrays(0)
        assert x.shape[0] == 0 and y.shape[0] == 0

    def test_pool_copies_are_value_semantics(self):
        pool = generate_synthetic(spec(), substream(14, "data"))
        pool = split_pool(pool, (0.8, 0.1, 0.1), substream(14, "split"))
        other = pool.copy()
        reveal_labels(other, QuerySet([(0, 0)], 1))
        other.domains[0].train_x[0, 0] = 99.0
        assert not pool.domains[0].labeled[0]
        assert pool.domains[0].train_x[0, 0] != 99.0

    def test_validate_catches_misaligned_mask(self):
        pool = generate_synthetic(spec(), substream(15, "data"))
        pool.domains[0].labeled = np.zeros(3, dtype=bool)
        with pytest.raises(DataError):
            pool.validate()
