import itertools

import numpy as np
import pytest

from skcap import dbbound as db
from skcap.dist import Channel, SizeError, VarSpec, cond_entropy, entropy, random_channel
from skcap.fracpart import FractionalPartition, preset_uniform_km1, vertices
from skcap.props import load_preset


def _bsc_pair(eps):
    """Y1 = X2 xor N1, Y2 = X1 xor N2, Z = X1 xor X2 (noiseless), N's iid Bernoulli(eps)."""
    p = np.zeros((2, 2, 2, 2, 2))
    for x1, x2, n1, n2 in itertools.product(range(2), repeat=4):
        p[x1, x2, x2 ^ n1, x1 ^ n2, x1 ^ x2] += (eps if n1 else 1 - eps) * (eps if n2 else 1 - eps)
    ins = [VarSpec("X1", 2), VarSpec("X2", 2)]
    outs = [VarSpec("Y1", 2), VarSpec("Y2", 2), VarSpec("Z", 2)]
    return Channel(ins, outs, p)


def _copy_channel():
    """Y1 = constant, Y2 = X1, Z = constant."""
    ins = [VarSpec("X1", 2), VarSpec("X2", 2)]
    outs = [VarSpec("Y1", 1), VarSpec("Y2", 2), VarSpec("Z", 1)]
    return Channel.deterministic(ins, outs, lambda x1, x2: (0, x1, 0))


def _tree_oracle(code, ch):
    """Walk every (w, output sequence) path and accumulate its mass."""
    k, n = code.k, code.n
    out = {}
    mat = ch.probs
    for ws in itertools.product(*(range(c) for c in code.w_cards)):
        pw = np.prod([code.w_probs[i][w] for i, w in enumerate(ws)])
        if pw == 0:
            continue

        def walk(j, hist, mass, record):
            if j == n:
                out[record] = out.get(record, 0.0) + mass
                return
            xs = []
            for i in range(k):
                idx = ws[i]
                for y in hist[i]:
                    idx = idx * 2 + y
                xs.append(int(code.encoders[i][j][idx]))
            for o in itertools.product(*(range(s) for s in ch.out_shape)):
                q = float(mat[tuple(xs) + o])
                if q > 0:
                    walk(j + 1, [h + (o[i],) for i, h in enumerate(hist)], mass * q,
                         record + tuple(xs) + o)

        walk(0, [()] * k, pw, ws)
    return out


def _xor_feedback_code():
    # step 1: X_i1 = W_i; step 2: X_12 = W_1 xor Y_11, X_22 = W_2
    return db.InteractiveCode(2, 2, [[0.5, 0.5], [0.3, 0.7]],
                              [[[0, 1], [0, 1, 1, 0]], [[0, 1], [0, 0, 1, 1]]], [0, 0])


class TestSimulate:
    def test_copy_chain(self):
        code = db.InteractiveCode(2, 1, [[0.5, 0.5], [1.0]], [[[0, 1]], [[0]]])
        tr = db.simulate_code(code, _copy_channel())
        assert tr.entropy(["Y2_1"]) == pytest.approx(1.0, abs=1e-12)
        assert tr.entropy(["Y2_1", "W1"]) - tr.entropy(["W1"]) == pytest.approx(0.0, abs=1e-12)

    def test_constant_encoders_independent_of_w(self):
        rng = np.random.default_rng(0)
        ch = random_channel(rng, [VarSpec("X1", 2), VarSpec("X2", 2)],
                            [VarSpec("Y1", 2), VarSpec("Y2", 2), VarSpec("Z", 2)])
        code = db.InteractiveCode(2, 2, [[0.5, 0.5], [0.2, 0.8]],
                                  [[[0, 0], [0, 0, 0, 0]], [[1, 1], [1, 1, 1, 1]]])
        d = db.simulate_code(code, ch).to_joint()
        rest = [n for n in d.names if not n.startswith("W")]
        from skcap.dist import mutual_info
        assert mutual_info(d, ["W1", "W2"], rest) == pytest.approx(0.0, abs=1e-12)

    def test_feedback_code_matches_outcome_tree(self):
        code = _xor_feedback_code()
        ch = _bsc_pair(0.1)
        tr = db.simulate_code(code, ch)
        ref = _tree_oracle(code, ch)
        got = {tuple(int(v) for v in r): float(p) for r, p in zip(tr.rows, tr.p)}
        assert set(got) == set(ref)
        for key, mass in ref.items():
            assert got[key] == pytest.approx(mass, abs=1e-15)
        assert tr.names == ("W1", "W2", "X1_1", "X2_1", "Y1_1", "Y2_1", "Z_1",
                            "X1_2", "X2_2", "Y1_2", "Y2_2", "Z_2")

    def test_support_entropy_matches_dense(self):
        tr = db.simulate_code(_xor_feedback_code(), _bsc_pair(0.2))
        d = tr.to_joint()
        for names in (["W1"], ["Y1_2", "Z_1"], list(d.names)):
            assert tr.entropy(names) == pytest.approx(entropy(d, names), abs=1e-12)

    def test_aux_axes(self):
        rng = np.random.default_rng(1)
        aux = random_channel(rng, [VarSpec(f"a{i}", 2) for i in range(5)], [VarSpec("T", 3)])
        tr = db.simulate_code(_xor_feedback_code(), _bsc_pair(0.1), aux)
        assert tr.has_t and "T_1" in tr.names and "T_2" in tr.names
        assert max(db.memoryless_gaps(tr)) <= 1e-9

    def test_bad_schedule(self):
        code = db.InteractiveCode(2, 1, [[1.0], [1.0]], [[[0]], [[0]]], [1])
        with pytest.raises(ValueError, match="schedule"):
            db.simulate_code(code, _bsc_pair(0.1))

    def test_bad_encoder_table(self):
        code = db.InteractiveCode(2, 1, [[0.5, 0.5], [1.0]], [[[0, 2]], [[0]]])
        with pytest.raises(ValueError, match="outside the alphabet"):
            db.simulate_code(code, _bsc_pair(0.1))
        code = db.InteractiveCode(2, 1, [[0.5, 0.5], [1.0]], [[[0]], [[0]]])
        with pytest.raises(ValueError, match="entries"):
            db.simulate_code(code, _bsc_pair(0.1))

    def test_aux_shape_mismatch(self):
        aux = Channel.deterministic([VarSpec("a", 2)], [VarSpec("T", 2)], lambda a: a)
        with pytest.raises(ValueError, match="auxiliary"):
            db.simulate_code(_xor_feedback_code(), _bsc_pair(0.1), aux)

    def test_size_cap(self, monkeypatch):
        monkeypatch.setattr(db, "MAX_CELLS", 8)
        with pytest.raises(SizeError):
            db.simulate_code(_xor_feedback_code(), _bsc_pair(0.1))

    def test_w_validation(self):
        with pytest.raises(ValueError, match="W1"):
            db.InteractiveCode(2, 1, [[0.5, 0.6], [1.0]], [[[0, 0]], [[0]]])


class TestDependenceBalance:
    def test_constant_encoders(self):
        # each Y_i depends only on its own noise: no dependence is induced
        ins = [VarSpec("X1", 2), VarSpec("X2", 2)]
        outs = [VarSpec("Y1", 2), VarSpec("Y2", 2), VarSpec("Z", 2)]
        p = np.zeros((2, 2, 2, 2, 2))
        for x1, x2, a, b in itertools.product(range(2), repeat=4):
            p[x1, x2, a, b, 0] += 0.3 ** a * 0.7 ** (1 - a) * 0.6 ** b * 0.4 ** (1 - b)
        ch = Channel(ins, outs, p)
        code = db.InteractiveCode(2, 2, [[0.5, 0.5], [0.5, 0.5]],
                                  [[[0, 0], [1, 1, 1, 1]], [[0, 0], [0, 0, 0, 0]]])
        lhs, rhs = db.dependence_balance_sides(db.simulate_code(code, ch), preset_uniform_km1(2))
        assert lhs == pytest.approx(0.0, abs=1e-12)
        assert rhs >= -1e-12

    def test_w_independent(self):
        tr = db.simulate_code(_xor_feedback_code(), _bsc_pair(0.1))
        assert abs(db.w_dependence(tr, preset_uniform_km1(2))) <= 1e-9

    def test_feedback_code(self):
        tr = db.simulate_code(_xor_feedback_code(), _bsc_pair(0.1))
        lhs, rhs = db.dependence_balance_sides(tr, preset_uniform_km1(2))
        assert lhs <= rhs + 1e-9
        assert lhs > 0.1

    def test_every_k3_vertex(self):
        rng = np.random.default_rng(2)
        for _ in range(5):
            chans = [db.binary_step_channel(rng, 3)]
            code = db.random_code(rng, 3, 2)
            aux = random_channel(rng, [VarSpec(f"a{i}", 2) for i in range(7)], [VarSpec("T", 2)])
            tr = db.simulate_code(code, chans, aux)
            for fp in vertices(3):
                for c in ("Z", "T"):
                    lhs, rhs = db.dependence_balance_sides(tr, fp, c)
                    assert lhs <= rhs + 1e-9

    def test_random_codes_with_schedule(self):
        rng = np.random.default_rng(3)
        for _ in range(30):
            k = int(rng.integers(2, 4))
            n = int(rng.integers(1, 4))
            chans = [db.binary_step_channel(rng, k) for _ in range(2)]
            code = db.random_code(rng, k, n, w_card=int(rng.integers(2, 5)), schedule=rng.integers(0, 2, size=n))
            tr = db.simulate_code(code, chans)
            lhs, rhs = db.dependence_balance_sides(tr, preset_uniform_km1(k))
            assert lhs <= rhs + 1e-9
            assert max(db.memoryless_gaps(tr)) <= 1e-9

    def test_argument_errors(self):
        tr = db.simulate_code(_xor_feedback_code(), _bsc_pair(0.1))
        with pytest.raises(ValueError, match="no auxiliary"):
            db.dependence_balance_sides(tr, preset_uniform_km1(2), "T")
        with pytest.raises(ValueError):
            db.dependence_balance_sides(tr, preset_uniform_km1(2), "Q")
        with pytest.raises(ValueError, match="k=3"):
            db.dependence_balance_sides(tr, preset_uniform_km1(3))


class TestIO:
    def test_bundled_code(self):
        code, chans = db.code_from_json(load_preset("feedback_code"))
        assert code.k == 2 and code.n == 2 and len(chans) == 1
        lhs, rhs = db.dependence_balance_sides(db.simulate_code(code, chans), preset_uniform_km1(2))
        assert lhs <= rhs + 1e-9

    def test_nested_encoder_lists(self):
        doc = load_preset("feedback_code")
        enc = doc["encoders"]
        doc["encoders"] = [[enc["1,1"], enc["1,2"]], [enc["2,1"], enc["2,2"]]]
        code, _ = db.code_from_json(doc)
        assert code.encoders[0][1].tolist() == [0, 1, 1, 0]

    def test_missing_field(self):
        doc = load_preset("feedback_code")
        del doc["w_cards"]
        with pytest.raises(ValueError, match="w_cards"):
            db.code_from_json(doc)
