import numpy as np
import pytest

from mdalbench.errors import ConfigError
from mdalbench.models import (
    build_model,
    forward_predict,
    parameter_count,
    split_part_predict,
)
from mdalbench.rng import substream

ALL_KINDS = ("sdl-joint", "sdl-separate", "dann", "mdnet", "man", "can")


def model(kind, d=10, h=8, c=3, k=2, lam=0.1, seed=0):
    return build_model(kind, d, h, c, k, lam, substream(seed, f"m/{kind}"))


def expected_parameters(kind, d, h, c, k):
    f = d * h + h
    clf = h * c + c
    if kind == "sdl-joint":
        return f + clf
    if kind == "sdl-separate":
        return k * (f + clf)
    if kind == "dann":
        return f + clf + (h * k + k)
    if kind == "mdnet":
        return f + k * clf
    wide_clf = 2 * h * c + c
    if kind == "man":
        return (k + 1) * f + wide_clf + (h * k + k)
    return (k + 1) * f + wide_clf + ((h + c) * k + k)  # can


class TestBuildModel:
    def test_sdl_joint_parameter_count(self):
        assert parameter_count(model("sdl-joint")) == 115

    def test_mdnet_parameter_count(self):
        assert parameter_count(model("mdnet")) == 142

    def test_man_parameter_count(self):
        assert parameter_count(model("man")) == 333

    def test_count_formulas_hold_for_random_dims(self):
        rng = np.random.default_rng(3)
        for _ in range(10):
            d, h, c, k = (int(rng.integers(1, 12)), int(rng.integers(1, 12)),
                          int(rng.integers(2, 6)), int(rng.integers(2, 5)))
            for kind in ALL_KINDS:
                got = parameter_count(model(kind, d, h, c, k))
                assert got == expected_parameters(kind, d, h, c, k), (kind, d, h, c, k)

    def test_single_domain_rejected(self):
        with pytest.raises(ConfigError):
            model("man", k=1)

    def test_unknown_kind_rejected(self):
        with pytest.raises(ConfigError):
            model("resnet")

    def test_wiring_shapes(self):
        m = model("can", d=6, h=4, c=3, k=2)
        assert m.discriminator.in_dim == 4 + 3
        assert m.classifiers[0].in_dim == 8
        assert len(m.privates) == 2
        m = model("dann", d=6, h=4, c=3, k=2)
        assert m.discriminator.in_dim == 4
        assert len(m.classifiers) == 1


class TestForwardPredict:
    def test_sdl_joint_ignores_domain_id(self):
        m = model("sdl-joint")
        x = substream(1, "x").normal(size=(4, 10))
        a = forward_predict(m, x, 0)
        b = forward_predict(m, x, 1)
        np.testing.assert_array_equal(a.probs, b.probs)

    def test_mdnet_shares_features_across_heads(self):
        m = model("mdnet")
        x = substream(1, "x").normal(size=(4, 10))
        a = forward_predict(m, x, 0)
        b = forward_predict(m, x, 1)
        np.testing.assert_array_equal(a.shared, b.shared)
        assert not np.array_equal(a.logits, b.logits)

    def test_zero_weight_man_predicts_uniform(self):
        m = model("man", c=4)
        for _, layer in m.layers():
            layer.w[...] = 0.0
            layer.b[...] = 0.0
        x = substream(1, "x").normal(size=(5, 10))
        trace = forward_predict(m, x, 0)
        np.testing.assert_allclose(trace.probs, 0.25)

    def test_invalid_domain_id(self):
        m = model("man")
        with pytest.raises(ValueError):
            forward_predict(m, np.zeros((1, 10)), 2)

    @pytest.mark.parametrize("kind", ALL_KINDS)
    def test_probabilities_sum_to_one(self, kind):
        m = model(kind)
        x = substream(2, "x").normal(size=(6, 10))
        for domain in (0, 1):
            trace = forward_predict(m, x, domain)
            np.testing.assert_allclose(trace.probs.sum(axis=1), 1.0, atol=1e-9)

    @pytest.mark.parametrize("kind", ALL_KINDS)
    def test_private_perturbation_is_domain_local(self, kind):
        # touching domain 0's private pathway must not move domain 1's output
        m = model(kind, k=3)
        x = substream(3, "x").normal(size=(4, 10))
        before = [forward_predict(m, x, dom).probs.copy() for dom in range(3)]
        if m.privates:
            m.privates[0].w += 0.5
        if len(m.classifiers) > 1:
            m.classifiers[0].w += 0.5
        after = [forward_predict(m, x, dom).probs for dom in range(3)]
        for dom in (1, 2):
            np.testing.assert_array_equal(before[dom], after[dom])


class TestSplitPartPredict:
    def test_whole_equals_forward_predict(self):
        m = model("man")
        x = substream(4, "x").normal(size=(3, 10))
        np.testing.assert_array_equal(
            split_part_predict(m, x, 1, "whole"), forward_predict(m, x, 1).probs)

    def test_zero_private_makes_shared_equal_whole(self):
        m = model("can")
        m.privates[0].w[...] = 0.0
        m.privates[0].b[...] = 0.0
        x = substream(4, "x").normal(size=(3, 10))
        np.testing.assert_allclose(split_part_predict(m, x, 0, "shared"),
                                   split_part_predict(m, x, 0, "whole"))

    def test_masked_parts_differ_generically(self):
        m = model("man")
        x = substream(5, "x").normal(size=(3, 10))
        shared = split_part_predict(m, x, 0, "shared")
        private = split_part_predict(m, x, 0, "private")
        assert not np.allclose(shared, private)

    def test_rejected_on_non_share_private(self):
        for kind in ("sdl-joint", "sdl-separate", "dann", "mdnet"):
            with pytest.raises(ConfigError):
                split_part_predict(model(kind), np.zeros((1, 10)), 0, "shared")

    def test_unknown_part_rejected(self):
        with pytest.raises(ValueError):
            split_part_predict(model("man"), np.zeros((1, 10)), 0, "bias")
