import numpy as np
import pytest

from mdalbench.data import SyntheticSpec, generate_synthetic, split_pool
from mdalbench.errors import TrainingError
from mdalbench.models import TrainParams, build_model, evaluate_micro, fit
from mdalbench.models.checkpoint import dump_bytes, load_checkpoint, save_checkpoint
from mdalbench.rng import substream


def small_pool(seed=0, labeled=True, noise=0.3, n=90):
    spec = SyntheticSpec(n_domains=2, n_classes=3, dim=5, samples_per_domain=n,
                         noise=noise, shift_norm=1.0, class_separation=3.0)
    pool = generate_synthetic(spec, substream(seed, "data"))
    pool = split_pool(pool, (0.7, 0.1, 0.2), substream(seed, "split"))
    if labeled:
        for d in pool.domains:
            d.labeled[:] = True
    return pool


def params(**kw):
    base = dict(optimizer="adam", learning_rate=1e-2, batch_size=16,
                patience=5, max_epochs=40)
    base.update(kw)
    return TrainParams(**base)


def test_zero_epochs_returns_model_unchanged():
    pool = small_pool()
    m = build_model("man", 5, 8, 3, 2, 0.1, substream(0, "m"))
    before = m.snapshot()
    result = fit(m, pool, params(max_epochs=0), substream(0, "t"))
    assert result.epochs == 0
    for name, layer in m.layers():
        np.testing.assert_array_equal(layer.w, before[name][0])


def test_separable_data_is_fit_to_high_accuracy():
    # sigma well below the class separation makes the pool linearly separable
    pool = small_pool(noise=0.05)
    m = build_model("man", 5, 8, 3, 2, 0.1, substream(1, "m"))
    fit(m, pool, params(), substream(1, "t"))
    xs = [d.train_x[d.labeled] for d in pool.domains]
    ys = [d.train_y[d.labeled] for d in pool.domains]
    assert evaluate_micro(m, xs, ys) >= 0.95


def test_fixed_seed_fits_bit_identically():
    snapshots = []
    for _ in range(2):
        pool = small_pool(seed=3)
        m = build_model("can", 5, 8, 3, 2, 0.1, substream(3, "m"))
        fit(m, pool, params(max_epochs=10), substream(3, "t"))
        snapshots.append(m.snapshot())
    for name in snapshots[0]:
        np.testing.assert_array_equal(snapshots[0][name][0], snapshots[1][name][0])
        np.testing.assert_array_equal(snapshots[0][name][1], snapshots[1][name][1])


def test_returned_model_matches_best_validation_epoch():
    pool = small_pool(seed=4)
    m = build_model("sdl-joint", 5, 8, 3, 2, 0.1, substream(4, "m"))
    result = fit(m, pool, params(max_epochs=25), substream(4, "t"))
    assert result.best_val == max(result.history)


def test_empty_domain_raises_training_error():
    pool = small_pool(labeled=False)
    pool.domains[0].labeled[:5] = True  # domain 1 left empty
    m = build_model("man", 5, 8, 3, 2, 0.1, substream(5, "m"))
    with pytest.raises(TrainingError):
        fit(m, pool, params(), substream(5, "t"))


def test_single_labeled_instance_cannot_carve_validation():
    pool = small_pool(labeled=False)
    for d in pool.domains:
        d.labeled[0] = True
    m = build_model("man", 5, 8, 3, 2, 0.1, substream(6, "m"))
    with pytest.raises(TrainingError):
        fit(m, pool, params(), substream(6, "t"))


def test_adversarial_training_runs_without_unlabeled_data():
    pool = small_pool()  # everything labeled, adversarial pool = labeled only
    m = build_model("dann", 5, 8, 3, 2, 0.1, substream(7, "m"))
    result = fit(m, pool, params(max_epochs=5), substream(7, "t"))
    assert result.epochs == 5 or result.epochs > 0


class TestCheckpoint:
    def test_round_trip_is_bit_exact(self, tmp_path):
        pool = small_pool(seed=8)
        m = build_model("can", 5, 8, 3, 2, 0.1, substream(8, "m"))
        fit(m, pool, params(max_epochs=5), substream(8, "t"))
        path = tmp_path / "model.npz"
        save_checkpoint(m, path)
        loaded = load_checkpoint(path)
        assert loaded.kind == "can"
        assert loaded.lam == 0.1
        for (name, layer), (_, other) in zip(m.layers(), loaded.layers()):
            np.testing.assert_array_equal(layer.w, other.w)
            np.testing.assert_array_equal(layer.b, other.b)

    def test_dump_bytes_stable(self):
        m = build_model("sdl-separate", 4, 3, 2, 2, 0.0, substream(9, "m"))
        assert dump_bytes(m) == dump_bytes(m)

    def test_rejects_foreign_npz(self, tmp_path):
        from mdalbench.errors import DataError

        path = tmp_path / "blob.npz"
        np.savez(path, a=np.zeros(3))
        with pytest.raises(DataError):
            load_checkpoint(path)
