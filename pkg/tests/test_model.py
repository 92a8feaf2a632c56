import math

import numpy as np
import pytest

from oracles import (central_gradient, full_loss, hs_loss, relative_error,
                     tree_leaf_log_probs)
from quicktext.dictionary import FeatureVector
from quicktext.huffman import build_tree
from quicktext.model import (Model, compute_hidden, full_softmax_step,
                             hierarchical_softmax_step, label_log_probabilities,
                             leaf_log_probability, softmax)


def fv(ids):
    return FeatureVector.from_ids(ids)


def zero_model(nfeatures, dim, k, loss="softmax", counts=None, dtype=np.float32):
    tree = build_tree(counts or [1] * k) if loss == "hs" else None
    rows = k - 1 if loss == "hs" else k
    return Model(np.zeros((nfeatures, dim), dtype), np.zeros((rows, dim), dtype), loss, tree)


def random_instance(rng, k, dim, nfeatures=12, dtype=np.float64):
    A = rng.standard_normal((nfeatures, dim)).astype(dtype)
    B = rng.standard_normal((k, dim)).astype(dtype)
    ids = rng.integers(0, nfeatures, size=rng.integers(1, 6))
    return A, B, ids


def test_hidden_is_mean():
    A = np.array([[1, 2], [3, 4]], dtype=np.float32)
    np.testing.assert_array_equal(compute_hidden(fv([0, 1]), A), [2, 3])


def test_hidden_single_and_repeated():
    A = np.random.default_rng(0).standard_normal((8, 3)).astype(np.float32)
    np.testing.assert_array_equal(compute_hidden(fv([4]), A), A[4])
    np.testing.assert_array_equal(compute_hidden(fv([5, 5]), A), A[5])


def test_hidden_rejects_empty():
    with pytest.raises(ValueError):
        compute_hidden(fv([]), np.zeros((2, 2), np.float32))


def test_hidden_backends_agree(kern):
    rng = np.random.default_rng(3)
    A = rng.standard_normal((30, 7))
    ids = np.array([1, 5, 5, 29, 0])
    out = np.zeros(7)
    kern.compute_hidden(A, ids, 1 / 5, out)
    np.testing.assert_allclose(out, A[ids].mean(axis=0), rtol=1e-14, atol=1e-15)


@pytest.mark.parametrize("scores, expected", [
    ([0, 0], [0.5, 0.5]),
    ([0, 0, 0], [1 / 3] * 3),
])
def test_softmax_symmetric(scores, expected):
    np.testing.assert_allclose(softmax(scores), expected)


def test_softmax_stable():
    p = softmax([1000.0, 0.0])
    assert np.all(np.isfinite(p))
    assert p[0] == pytest.approx(1.0) and p[1] == pytest.approx(0.0, abs=1e-300)


def test_softmax_sums_to_one():
    rng = np.random.default_rng(1)
    for _ in range(100):
        p = softmax(rng.standard_normal(rng.integers(2, 200)) * 10)
        assert abs(p.sum() - 1) < 1e-12


@pytest.mark.parametrize("k", [2, 3, 7, 50])
def test_zero_model_full_loss_is_log_k(k):
    m = zero_model(4, 3, k)
    assert full_softmax_step(m, fv([0, 1]), 1, 0.1) == pytest.approx(math.log(k), rel=1e-6)


def test_zero_model_hs_loss_counts_depth():
    counts = [5, 2, 1, 1]
    m = zero_model(4, 3, 4, "hs", counts)
    for label, depth in enumerate(m.tree.depths()):
        m.B[:] = 0
        loss = hierarchical_softmax_step(m, fv([0]), label, 0.1)
        assert loss == pytest.approx(depth * math.log(2), rel=1e-6)


def test_two_class_hs_is_logistic_loss():
    rng = np.random.default_rng(2)
    for _ in range(20):
        A, B, ids = random_instance(rng, 1, 4)
        m = Model(A.copy(), B.copy(), "hs", build_tree([3, 1]))
        h = A[ids].mean(axis=0)
        s = float(B[0] @ h)
        for label in (0, 1):
            sign = -1.0 if m.tree.path(label)[1][0] else 1.0
            m.A[:], m.B[:] = A, B
            expected = math.log1p(math.exp(-sign * s))
            assert hierarchical_softmax_step(m, fv(ids), label, 0.0) == pytest.approx(expected)


@pytest.mark.parametrize("loss", ["softmax", "hs"])
def test_gradient_matches_finite_differences(kern, loss):
    rng = np.random.default_rng(17)
    for trial in range(25):
        k = int(rng.integers(2, 17))
        dim = int(rng.integers(1, 9))
        rows = k - 1 if loss == "hs" else k
        A, B, ids = random_instance(rng, rows, dim)
        label = int(rng.integers(0, k))
        tree = build_tree(rng.integers(0, 20, size=k).tolist()) if loss == "hs" else None
        weight = 1.0 / len(ids)

        A1, B1 = A.copy(), B.copy()
        hidden, grad, out = np.zeros(dim), np.zeros(dim), np.zeros(rows)
        lr = 1.0
        if loss == "hs":
            off, prow, codes = tree.flat_paths()
            sl = slice(off[label], off[label + 1])
            kern.hs_step(A1, B1, ids, weight, prow[sl], codes[sl], lr, hidden, grad)
            f = lambda: hs_loss(tree, A, B, ids, label)  # noqa: E731
        else:
            kern.softmax_step(A1, B1, ids, weight, label, lr, hidden, grad, out)
            f = lambda: full_loss(A, B, ids, label)  # noqa: E731
        analytic_B = -(B1 - B) / lr
        analytic_A = -(A1 - A) / lr
        numeric_B = central_gradient(f, B)
        numeric_A = central_gradient(f, A)
        assert relative_error(analytic_B, numeric_B) < 1e-5
        assert relative_error(analytic_A, numeric_A) < 1e-5


@pytest.mark.parametrize("loss", ["softmax", "hs"])
def test_step_returns_pre_update_loss(kern, loss):
    rng = np.random.default_rng(4)
    k, dim = 6, 5
    rows = k - 1 if loss == "hs" else k
    A, B, ids = random_instance(rng, rows, dim)
    tree = build_tree([4, 3, 3, 2, 1, 1])
    hidden, grad, out = np.zeros(dim), np.zeros(dim), np.zeros(rows)
    if loss == "hs":
        off, prow, codes = tree.flat_paths()
        expected = hs_loss(tree, A, B, ids, 2)
        got = kern.hs_step(A.copy(), B.copy(), ids, 1 / len(ids), prow[off[2]:off[3]],
                           codes[off[2]:off[3]], 0.5, hidden, grad)
    else:
        expected = full_loss(A, B, ids, 2)
        got = kern.softmax_step(A.copy(), B.copy(), ids, 1 / len(ids), 2, 0.5,
                                hidden, grad, out)
    assert got == pytest.approx(expected, rel=1e-12)


@pytest.mark.parametrize("loss", ["softmax", "hs"])
def test_small_step_decreases_loss(loss):
    rng = np.random.default_rng(6)
    for _ in range(50):
        k = int(rng.integers(2, 12))
        dim = int(rng.integers(1, 8))
        rows = k - 1 if loss == "hs" else k
        A, B, ids = random_instance(rng, rows, dim)
        tree = build_tree(rng.integers(1, 9, size=k).tolist()) if loss == "hs" else None
        m = Model(A, B, loss, tree)
        label = int(rng.integers(0, k))
        step = hierarchical_softmax_step if loss == "hs" else full_softmax_step
        before = step(m, fv(ids), label, 1e-3)
        after = step(m, fv(ids), label, 0.0)
        assert after < before


@pytest.mark.parametrize("loss", ["softmax", "hs"])
def test_parameters_stay_finite(kern, loss):
    rng = np.random.default_rng(8)
    k, dim = 20, 6
    rows = k - 1 if loss == "hs" else k
    A = rng.uniform(-1 / dim, 1 / dim, (50, dim)).astype(np.float32)
    B = np.zeros((rows, dim), np.float32)
    tree = build_tree(list(range(1, k + 1)))
    off, prow, codes = tree.flat_paths()
    hidden, grad, out = (np.zeros(dim, np.float32), np.zeros(dim, np.float32),
                         np.zeros(rows, np.float32))
    for _ in range(3000):
        ids = rng.integers(0, 50, size=3)
        label = int(rng.integers(0, k))
        if loss == "hs":
            kern.hs_step(A, B, ids, 1 / 3, prow[off[label]:off[label + 1]],
                         codes[off[label]:off[label + 1]], 1.0, hidden, grad)
        else:
            kern.softmax_step(A, B, ids, 1 / 3, label, 1.0, hidden, grad, out)
    assert np.all(np.isfinite(A)) and np.all(np.isfinite(B))


def test_backends_agree_on_steps():
    from quicktext import _pykernels

    kernels = pytest.importorskip("quicktext._kernels")
    rng = np.random.default_rng(21)
    tree = build_tree([9, 4, 4, 2, 1, 1, 1])
    off, prow, codes = tree.flat_paths()
    for loss in ("softmax", "hs"):
        rows = 6 if loss == "hs" else 7
        A, B, _ = random_instance(rng, rows, 5)
        states = []
        for mod in (_pykernels, kernels):
            a, b = A.copy(), B.copy()
            hidden, grad, out = np.zeros(5), np.zeros(5), np.zeros(rows)
            losses = []
            for step in range(30):
                ids = np.array([step % 12, (step * 7) % 12])
                label = step % 7
                if loss == "hs":
                    sl = slice(off[label], off[label + 1])
                    losses.append(mod.hs_step(a, b, ids, 0.5, prow[sl], codes[sl], 0.3,
                                              hidden, grad))
                else:
                    losses.append(mod.softmax_step(a, b, ids, 0.5, label, 0.3,
                                                   hidden, grad, out))
            states.append((a, b, losses))
        np.testing.assert_allclose(states[0][0], states[1][0], rtol=1e-10, atol=1e-12)
        np.testing.assert_allclose(states[0][1], states[1][1], rtol=1e-10, atol=1e-12)
        np.testing.assert_allclose(states[0][2], states[1][2], rtol=1e-10)


def test_zero_model_leaf_probabilities():
    m = zero_model(2, 3, 3, "hs", [2, 1, 1])
    h = np.zeros(3, np.float32)
    probs = [math.exp(leaf_log_probability(m, h, i)) for i in range(3)]
    assert probs == pytest.approx([0.5, 0.25, 0.25])


def test_leaf_probabilities_match_oracle_and_sum_to_one():
    rng = np.random.default_rng(12)
    for _ in range(40):
        k = int(rng.integers(2, 65))
        dim = int(rng.integers(1, 9))
        tree = build_tree(rng.integers(0, 100, size=k).tolist())
        B = rng.standard_normal((k - 1, dim)) * 3
        m = Model(np.zeros((1, dim)), B, "hs", tree)
        h = rng.standard_normal(dim)
        lps = np.array([leaf_log_probability(m, h, i) for i in range(k)])
        np.testing.assert_allclose(lps, tree_leaf_log_probs(tree, B, h), rtol=1e-12, atol=1e-12)
        assert abs(np.exp(lps).sum() - 1.0) < 1e-9


def test_path_probability_is_monotone():
    rng = np.random.default_rng(13)
    for _ in range(40):
        k = int(rng.integers(2, 40))
        tree = build_tree(rng.integers(1, 50, size=k).tolist())
        B = rng.standard_normal((k - 1, 4)) * 5
        h = rng.standard_normal(4)
        for label in range(k):
            nodes, code = tree.path(label)
            prefix = 0.0
            for node, c in zip(nodes, code):
                s = B[node - k] @ h
                nxt = prefix + (-np.logaddexp(0, s) if c else -np.logaddexp(0, -s))
                assert nxt <= prefix
                prefix = nxt
            assert prefix == pytest.approx(leaf_log_probability(Model(np.zeros((1, 4)), B, "hs", tree), h, label))


def test_full_softmax_log_probs_normalized():
    rng = np.random.default_rng(14)
    B = rng.standard_normal((30, 5)).astype(np.float32)
    m = Model(np.zeros((1, 5), np.float32), B, "softmax")
    lps = label_log_probabilities(m, rng.standard_normal(5).astype(np.float32))
    assert abs(np.exp(lps).sum() - 1) < 1e-12


def test_initialize():
    m = Model.initialize(100, 5, 8, "hs", label_counts=[5, 4, 3, 2, 1], seed=3)
    assert m.A.shape == (100, 8) and m.B.shape == (4, 8)
    assert m.A.dtype == np.float32
    assert np.all(np.abs(m.A) <= 1 / 8) and not np.any(m.B)
    m2 = Model.initialize(100, 5, 8, "softmax", seed=3)
    assert m2.B.shape == (5, 8)
    np.testing.assert_array_equal(m.A, m2.A)


def test_model_rejects_bad_shapes():
    with pytest.raises(ValueError):
        Model(np.zeros((3, 2)), np.zeros((4, 2)), "hs", build_tree([1, 1, 1, 1]))
    with pytest.raises(ValueError):
        Model(np.zeros((3, 2)), np.zeros((4, 3)), "softmax")
