import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from skcap.dist import (
    Channel,
    JointDist,
    SizeError,
    VarSpec,
    binary_entropy,
    channel_from_json,
    channel_to_json,
    cond_entropy,
    cond_mutual_info,
    dist_from_json,
    dist_to_json,
    entropy,
    marginalize,
    mutual_info,
    product,
    push_through,
    random_channel,
    random_joint,
)

import oracles


def _rand(rng, k, max_card=4):
    return random_joint(rng, [VarSpec(f"X{i}", int(rng.integers(1, max_card + 1))) for i in range(1, k + 1)])


seeds = st.integers(0, 2**32 - 1)


class TestConstruction:
    def test_clamps_tiny_negative(self):
        d = JointDist.from_array(["A"], [1.0 + 5e-13, -5e-13])
        assert d.probs[1] == 0.0

    def test_rejects_negative(self):
        with pytest.raises(ValueError):
            JointDist.from_array(["A"], [1.1, -0.1])

    def test_rejects_bad_mass(self):
        with pytest.raises(ValueError, match="mass"):
            JointDist.from_array(["A"], [0.5, 0.4])

    def test_rejects_shape_mismatch(self):
        with pytest.raises(ValueError, match="shape"):
            JointDist([VarSpec("A", 3)], [0.5, 0.5])

    def test_rejects_duplicate_names(self):
        with pytest.raises(ValueError, match="duplicate"):
            JointDist.from_array(["A", "A"], np.full((2, 2), 0.25))

    def test_cell_cap(self):
        with pytest.raises(SizeError):
            JointDist([VarSpec("A", 2**13), VarSpec("B", 2**12)], None)

    def test_probs_read_only(self):
        d = JointDist.uniform([VarSpec("A", 2)])
        with pytest.raises(ValueError):
            d.probs[0] = 1.0

    def test_channel_rows_must_sum_to_one(self):
        with pytest.raises(ValueError, match="input slice 1"):
            Channel([VarSpec("X", 2)], [VarSpec("Y", 2)], [[0.5, 0.5], [0.7, 0.2]])


class TestEntropy:
    def test_uniform(self):
        d = JointDist.uniform([VarSpec("A", 4), VarSpec("B", 2)])
        assert entropy(d, "A") == pytest.approx(2.0, abs=1e-12)
        assert entropy(d, ["A", "B"]) == pytest.approx(3.0, abs=1e-12)

    def test_point_mass_is_zero(self):
        d = JointDist.from_array(["A"], [0.0, 1.0, 0.0])
        assert entropy(d, "A") == 0.0

    def test_empty_set_rejected(self):
        d = JointDist.uniform([VarSpec("A", 2)])
        with pytest.raises(ValueError):
            entropy(d, [])

    def test_correlated_bits_mi(self):
        d = JointDist.from_array(["X1", "X2"], [[0.45, 0.05], [0.05, 0.45]])
        assert mutual_info(d, "X1", "X2") == pytest.approx(0.5310044064107188, abs=1e-12)

    def test_overlap_rejected(self):
        d = JointDist.uniform([VarSpec("A", 2), VarSpec("B", 2)])
        with pytest.raises(ValueError, match="overlap"):
            cond_mutual_info(d, "A", ["A", "B"])

    @pytest.mark.parametrize("eps, expected", [(0.0, 0.0), (0.5, 1.0), (1.0, 0.0), (0.25, 0.8112781244591328)])
    def test_binary_entropy(self, eps, expected):
        assert binary_entropy(eps) == pytest.approx(expected, abs=1e-12)

    def test_binary_entropy_range(self):
        with pytest.raises(ValueError):
            binary_entropy(1.5)

    def test_matches_dictionary_oracle(self):
        rng = np.random.default_rng(11)
        for _ in range(30):
            d = _rand(rng, 3)
            for keep in (["X1"], ["X2", "X3"], ["X1", "X2", "X3"]):
                assert entropy(d, keep) == pytest.approx(oracles.H(d, keep), abs=1e-12)
            assert cond_mutual_info(d, "X1", "X2", "X3") == pytest.approx(
                oracles.cmi(d, ["X1"], ["X2"], ["X3"]), abs=1e-12)


class TestProperties:
    @settings(max_examples=200, deadline=None)
    @given(seeds, st.integers(1, 4))
    def test_entropy_bounds(self, seed, k):
        rng = np.random.default_rng(seed)
        d = _rand(rng, k)
        names = list(d.names)
        h = entropy(d, names)
        assert -1e-9 <= h <= sum(math.log2(v.card) for v in d.vars) + 1e-9

    def test_chain_rule_500(self):
        rng = np.random.default_rng(5)
        for _ in range(500):
            k = int(rng.integers(2, 5))
            d = _rand(rng, k)
            names = list(d.names)
            cut = int(rng.integers(1, k))
            a, b = names[:cut], names[cut:]
            assert entropy(d, names) == pytest.approx(entropy(d, a) + cond_entropy(d, b, a), abs=1e-9)

    @settings(max_examples=100, deadline=None)
    @given(seeds)
    def test_data_processing(self, seed):
        rng = np.random.default_rng(seed)
        d = _rand(rng, 2)
        ch = random_channel(rng, [d.vars[1]], [VarSpec("C", int(rng.integers(1, 5)))], 0.5)
        j = push_through(d, ch)
        assert mutual_info(j, "X1", "C") <= mutual_info(j, "X1", "X2") + 1e-9

    @settings(max_examples=100, deadline=None)
    @given(seeds)
    def test_cmi_nonnegative_and_symmetric(self, seed):
        rng = np.random.default_rng(seed)
        d = _rand(rng, 3)
        a = cond_mutual_info(d, "X1", "X2", "X3")
        assert a >= -1e-12
        assert a == pytest.approx(cond_mutual_info(d, "X2", "X1", "X3"), abs=1e-12)


class TestMarginalizePush:
    def test_keep_all_is_identity(self):
        d = _rand(np.random.default_rng(0), 3)
        assert np.array_equal(marginalize(d, d.names).probs, d.probs)

    def test_product_factor(self):
        rng = np.random.default_rng(1)
        a, b = _rand(rng, 1), random_joint(rng, [VarSpec("B", 3)])
        np.testing.assert_allclose(marginalize(product(a, b), "B").probs, b.probs, atol=1e-15)

    def test_axis_sum_oracle(self):
        d = _rand(np.random.default_rng(2), 3)
        np.testing.assert_allclose(marginalize(d, ["X1", "X3"]).probs, d.probs.sum(axis=1), atol=1e-15)

    def test_keep_preserves_original_order(self):
        d = _rand(np.random.default_rng(3), 3)
        assert marginalize(d, ["X3", "X1"]).names == ("X1", "X3")

    def test_identity_channel_copy(self):
        d = _rand(np.random.default_rng(4), 2)
        ch = Channel.deterministic([d.vars[0]], [VarSpec("C", d.card("X1"))], lambda x: x)
        j = push_through(d, ch)
        assert cond_entropy(j, "C", "X1") == pytest.approx(0.0, abs=1e-12)

    def test_constant_channel(self):
        d = _rand(np.random.default_rng(5), 2)
        ch = Channel.deterministic([d.vars[0]], [VarSpec("C", 3)], lambda x: 2)
        j = push_through(d, ch)
        np.testing.assert_allclose(j.probs[..., 2], d.probs, atol=1e-15)
        assert entropy(j, "C") == 0.0

    def test_loop_oracle(self):
        rng = np.random.default_rng(6)
        for _ in range(10):
            d = _rand(rng, 3, 3)
            ch = random_channel(rng, [d.vars[2], d.vars[0]], [VarSpec("Y", 2), VarSpec("Z", 3)])
            j = push_through(d, ch)
            ref = oracles.push(d, ch)
            for idx, p in ref.items():
                assert j.probs[idx] == pytest.approx(p, abs=1e-15)
            assert j.probs.sum() == pytest.approx(1.0)

    def test_output_collision(self):
        d = _rand(np.random.default_rng(7), 2)
        ch = Channel.deterministic([d.vars[0]], [VarSpec("X2", 2)], lambda x: 0)
        with pytest.raises(ValueError, match="collide"):
            push_through(d, ch)


class TestJson:
    def test_dist_round_trip(self):
        d = _rand(np.random.default_rng(8), 3)
        back = dist_from_json(dist_to_json(d))
        assert back.names == d.names
        np.testing.assert_allclose(back.probs, d.probs, atol=1e-15)

    def test_channel_round_trip(self):
        rng = np.random.default_rng(9)
        ch = random_channel(rng, [VarSpec("X", 2)], [VarSpec("Y", 3)])
        back = channel_from_json(channel_to_json(ch))
        np.testing.assert_allclose(back.probs, ch.probs, atol=1e-15)

    def test_loader_normalizes_small_error(self):
        d = dist_from_json({"vars": [{"name": "A", "card": 2}], "probs": [0.5, 0.5000004]})
        assert d.probs.sum() == pytest.approx(1.0, abs=1e-15)

    def test_loader_rejects_large_error(self):
        with pytest.raises(ValueError, match="total mass"):
            dist_from_json({"vars": [{"name": "A", "card": 2}], "probs": [0.5, 0.51]})

    def test_loader_field_diagnostics(self):
        with pytest.raises(ValueError, match=r"vars\[0\]"):
            dist_from_json({"vars": [{"card": 2}], "probs": [0.5, 0.5]})
        with pytest.raises(ValueError, match="nested shape"):
            dist_from_json({"vars": [{"name": "A", "card": 3}], "probs": [0.5, 0.5]})
