import numpy as np
import pytest
from fractions import Fraction
from hypothesis import given, settings, strategies as st
from scipy.optimize import linprog

from skcap import fracpart as fpm
from skcap.fracpart import FractionalPartition, Partition

import oracles


def fp(k, **named):
    """fp(3, s12=0.5) style constructor: digits after 's' are 1-based members."""
    return FractionalPartition.from_subsets(k, {tuple(int(c) for c in key[1:]): w for key, w in named.items()})


class TestMasks:
    def test_mask_round_trip(self):
        assert fpm.mask_of([1, 3]) == 0b101
        assert fpm.members(0b101) == (1, 3)

    def test_mask_of_rejects_zero(self):
        with pytest.raises(ValueError):
            fpm.mask_of([0])

    def test_canonical_order(self):
        assert list(fpm.proper_masks(3)) == [1, 2, 3, 4, 5, 6]


class TestValidate:
    def test_presets(self):
        assert fpm.preset_uniform_km1(2).weights == {1: 1.0, 2: 1.0}
        assert fpm.preset_uniform_km1(3).weights == {3: 0.5, 5: 0.5, 6: 0.5}
        four = fpm.preset_uniform_km1(4)
        assert sorted(four.weights) == [7, 11, 13, 14]
        assert all(w == pytest.approx(1 / 3) for w in four.weights.values())
        for k in range(2, 9):
            assert fpm.is_valid(fpm.preset_uniform_km1(k))

    def test_row_sum_violation(self):
        problems = fpm.validate(fp(3, s12=0.5, s13=0.5))
        assert any("row 2" in p for p in problems) and any("row 3" in p for p in problems)

    def test_negative_weight(self):
        problems = fpm.validate(fp(3, s1=-1.0, s12=1.0, s13=1.0))
        assert problems == ["subset {1} has negative weight -1"]
        bad = FractionalPartition(2, {1: 2.0, 2: 1.0, 3: -1.0})
        assert any("not a nonempty proper subset" in p for p in fpm.validate(bad))

    def test_require_valid_raises(self):
        with pytest.raises(ValueError, match="invalid fractional partition"):
            fpm.require_valid(fp(2, s1=0.5, s2=1.0))

    def test_weights_below_threshold_dropped(self):
        assert FractionalPartition(2, {1: 1.0, 2: 1.0, 3: 1e-13}).weights == {1: 1.0, 2: 1.0}


class TestPartitionPreset:
    def test_all_singletons_is_uniform(self):
        assert fpm.preset_partition(Partition([[1], [2], [3]])).weights == fpm.preset_uniform_km1(3).weights

    def test_two_blocks(self):
        w = fpm.preset_partition(Partition([[1, 2], [3]]))
        assert w.weights == {0b100: 1.0, 0b011: 1.0}
        assert fpm.is_valid(w)

    def test_k4_three_blocks(self):
        w = fpm.preset_partition(Partition([[1], [2], [3, 4]]))
        assert w.weights == {0b0011: 0.5, 0b1101: 0.5, 0b1110: 0.5}
        assert fpm.is_valid(w)

    def test_random_partitions_valid(self):
        rng = np.random.default_rng(3)
        n = 0
        while n < 50:
            k = int(rng.integers(2, 9))
            labels = rng.integers(0, k, size=k)
            blocks = {}
            for i, lab in enumerate(labels, 1):
                blocks.setdefault(int(lab), []).append(i)
            if len(blocks) < 2:
                continue
            assert fpm.is_valid(fpm.preset_partition(Partition(blocks.values())))
            n += 1

    def test_partition_errors(self):
        with pytest.raises(ValueError, match="overlap"):
            Partition([[1, 2], [2, 3]])
        with pytest.raises(ValueError, match="cover"):
            Partition([[1], [3]])
        with pytest.raises(ValueError):
            fpm.preset_partition(Partition([[1, 2]]))


class TestKeyset:
    def test_pair_weight_blocks_two_keys(self):
        assert not fpm.admissible_for_keyset(fpm.preset_uniform_km1(3), 2)

    def test_full_keyset_vacuous(self):
        assert fpm.admissible_for_keyset(fpm.preset_uniform_km1(3), 3)

    def test_single_key_never_admissible(self):
        assert not fpm.admissible_for_keyset(fp(3, s1=1, s23=1), 1)

    def test_admissible_example(self):
        assert fpm.admissible_for_keyset(fp(3, s1=1, s23=1), 2)


class TestVertices:
    @pytest.mark.parametrize("k", [2, 3, 4])
    def test_against_exact_basis_oracle(self, k):
        ref = oracles.polytope_vertices(k)
        got = {tuple(Fraction(x).limit_denominator(1000) for x in v.vector()) for v in fpm.vertices(k)}
        assert got == ref

    def test_counts(self):
        assert [len(fpm.vertices(k)) for k in (2, 3, 4, 5)] == [1, 5, 41, 1291]

    def test_k3_contains_named_vertices(self):
        vecs = [tuple(v.vector()) for v in fpm.vertices(3)]
        assert tuple(fp(3, s1=1, s2=1, s3=1).vector()) in vecs
        assert tuple(fpm.preset_uniform_km1(3).vector()) in vecs

    @pytest.mark.parametrize("k", [2, 3, 4, 5])
    def test_all_valid(self, k):
        assert all(fpm.is_valid(v) for v in fpm.vertices(k))

    def test_mixtures_valid(self):
        rng = np.random.default_rng(4)
        for _ in range(200):
            k = int(rng.integers(2, 6))
            verts = fpm.vertices(k)
            pick = rng.choice(len(verts), size=min(3, len(verts)), replace=False)
            w = rng.dirichlet(np.ones(len(pick)))
            vec = sum(a * verts[i].vector() for a, i in zip(w, pick))
            assert fpm.is_valid(FractionalPartition.from_vector(k, vec))


class TestOptimize:
    def test_matches_vertex_optimum(self):
        rng = np.random.default_rng(5)
        for _ in range(100):
            k = int(rng.integers(2, 6))
            c = rng.normal(size=(1 << k) - 2)
            vals = np.array([v.vector() for v in fpm.vertices(k)]) @ c
            for sense, ref in (("min", vals.min()), ("max", vals.max())):
                for method in ("simplex", "vertex"):
                    got, val = fpm.optimize_linear(k, c, sense, method=method)
                    assert val == pytest.approx(ref, abs=1e-9)
                    assert fpm.is_valid(got)

    @pytest.mark.parametrize("k", range(6, 13))
    def test_simplex_against_linprog(self, k):
        rng = np.random.default_rng(k)
        A = fpm.incidence(k)
        for _ in range(3 if k < 10 else 1):
            c = rng.normal(size=A.shape[1])
            ref = linprog(c, A_eq=A, b_eq=np.ones(k), bounds=(0, None), method="highs")
            got, val = fpm.optimize_linear(k, c)
            assert val == pytest.approx(ref.fun, abs=1e-8)
            assert fpm.is_valid(got)

    def test_keyset_face(self):
        rng = np.random.default_rng(6)
        for _ in range(20):
            k = int(rng.integers(3, 6))
            r = int(rng.integers(2, k + 1))
            c = rng.normal(size=(1 << k) - 2)
            a, va = fpm.optimize_linear(k, c, method="vertex", r=r)
            b, vb = fpm.optimize_linear(k, c, method="simplex", r=r)
            assert va == pytest.approx(vb, abs=1e-9)
            assert fpm.admissible_for_keyset(a, r) and fpm.admissible_for_keyset(b, r)

    def test_mapping_objective_and_ties(self):
        # a flat objective ties every vertex; the first in canonical order wins
        got, val = fpm.optimize_linear(3, {(1,): 0.0}, "min")
        assert val == 0.0
        assert got.vector().tolist() == fpm.vertices(3)[0].vector().tolist()
        _, val = fpm.optimize_linear(3, {(1,): 1.0, 0b110: 1.0}, "max")
        assert val == pytest.approx(2.0)

    def test_rejects_r1_and_bad_k(self):
        with pytest.raises(ValueError):
            fpm.optimize_linear(3, np.zeros(6), r=1)
        with pytest.raises(ValueError):
            fpm.optimize_linear(13, np.zeros((1 << 13) - 2))
        with pytest.raises(ValueError):
            fpm.optimize_linear(6, np.zeros(62), method="vertex")

    @settings(max_examples=50, deadline=None)
    @given(st.integers(0, 2**32 - 1))
    def test_lp_value_is_lower_bound_on_random_points(self, seed):
        rng = np.random.default_rng(seed)
        k = 4
        c = rng.normal(size=14)
        _, lo = fpm.optimize_linear(k, c, "min")
        _, hi = fpm.optimize_linear(k, c, "max")
        verts = fpm.vertices(k)
        w = rng.dirichlet(np.ones(len(verts)))
        x = sum(a * v.vector() for a, v in zip(w, verts))
        assert lo - 1e-9 <= x @ c <= hi + 1e-9


class TestIO:
    def test_parse_presets(self):
        assert fpm.parse_preset("uniform-km1", 3).weights == fpm.preset_uniform_km1(3).weights
        assert fpm.parse_preset("partition:1,2|3", 3).weights == {4: 1.0, 3: 1.0}
        with pytest.raises(ValueError):
            fpm.parse_preset("partition:1,2|3", 4)
        with pytest.raises(ValueError):
            fpm.parse_preset("bogus", 3)

    def test_json_round_trip(self):
        w = fpm.preset_uniform_km1(4)
        back = fpm.fp_from_json(fpm.fp_to_json(w))
        assert back.weights == w.weights

    def test_json_errors(self):
        with pytest.raises(ValueError, match="lambda file"):
            fpm.fp_from_json({"k": 3})
