import itertools
from collections import Counter
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from unlabeled_rigidity.errors import IndexOutOfRange
from unlabeled_rigidity.geometry import Configuration, edge_lengths, n_edges, sample_pseudo_generic
from unlabeled_rigidity.measurement import (LengthFunctional, MeasurementEnsemble, UnlabeledDataSet, Walk,
                                            build_trilateration_ensemble, canonical_matrix, ensemble_matrix,
                                            evaluate, evaluate_labeled, find_trilateration_order,
                                            random_walks, scaled_ensemble, walk_to_functional,
                                            _canonical_programmatic)


def leibniz_det(a):
    a = [list(r) for r in a]
    n = len(a)
    total = 0
    for perm in itertools.permutations(range(n)):
        inv = sum(perm[i] > perm[j] for i in range(n) for j in range(i + 1, n))
        term = 1
        for i, j in enumerate(perm):
            term *= a[i][j]
        total += (-1) ** inv * term
    return total


def test_walk_equality_is_edge_multiset():
    assert Walk((0, 1, 2)) == Walk((2, 1, 0))
    assert Walk((0, 1, 2, 0)) == Walk((1, 2, 0, 1))
    assert Walk((0, 1, 0)) != Walk((0, 1))
    assert Walk.ping(0, 1).edges == Counter({(0, 1): 2})
    assert Walk.triangle(2, 0, 1).kind == "loop"
    with pytest.raises(ValueError):
        Walk((0, 0, 1))
    with pytest.raises(ValueError):
        Walk((3,))


def test_functional_value_and_properties():
    p = Configuration([[0.0, 0.0], [3.0, 0.0], [0.0, 4.0]])
    f = walk_to_functional(Walk((1, 0, 2, 0)), 3)
    assert f.coefficients == (1, 2, 0)
    assert f.value(p) == pytest.approx(3 + 4 + 4)
    assert f.is_bounded(2) and not f.is_bounded(1)
    assert f.is_whole
    assert f.degrees == [3, 1, 2]
    g = LengthFunctional((Fraction(1, 2), 0, 1), 3)
    assert not g.is_whole
    assert f.relabeled([2, 1, 0]).coefficients == (0, 2, 1)
    with pytest.raises(IndexOutOfRange):
        walk_to_functional(Walk((0, 5)), 3)


def test_loop_ensemble_needs_even_degrees():
    with pytest.raises(ValueError):
        MeasurementEnsemble.from_walks([Walk((0, 1, 2))], 3, "loop")
    with pytest.raises(ValueError):
        UnlabeledDataSet((1.0, -2.0), 2, 2)
    with pytest.raises(ValueError):
        UnlabeledDataSet((1.0,), 2, 2, mode="star")


def test_ensemble_matrix_types():
    rows = [walk_to_functional(Walk((0, 1)), 3), walk_to_functional(Walk((0, 1, 2)), 3)]
    m = ensemble_matrix(rows)
    assert m.dtype.kind == "i" and m.tolist() == [[1, 0, 0], [1, 0, 1]]
    assert ensemble_matrix([]).shape == (0, 0)
    frac = ensemble_matrix([LengthFunctional((Fraction(1, 3), 0, 0), 3)])
    assert frac.dtype == object


def test_canonical_matrices():
    n1 = canonical_matrix("base", 2)
    n2 = canonical_matrix("trilat", 2)
    assert np.array_equal(n1, _canonical_programmatic("base", 2))
    assert np.array_equal(n2, _canonical_programmatic("trilat", 2))
    assert leibniz_det(n1) == 8
    assert leibniz_det(n2) == 2
    assert np.array_equal(n2[:3], np.eye(6, dtype=int)[:3])
    assert np.array_equal(n2[3:], n1[3:])
    n31 = canonical_matrix("base", 3)
    assert n31.shape == (10, 10) and round(abs(np.linalg.det(n31))) > 0
    assert np.array_equal(canonical_matrix("trilat", 3)[:6], np.eye(10, dtype=int)[:6])
    with pytest.raises(ValueError):
        canonical_matrix("base", 1)


def test_evaluate_shuffles_deterministically():
    p = sample_pseudo_generic(6, 2, 1)
    ens = build_trilateration_ensemble(6, 2, "loop", extra=2, b=2, seed=3)
    a = evaluate(ens, p, seed=7)
    b = evaluate(ens, p, seed=7)
    assert a == b and a.mode == "loop" and a.bound == 2
    assert sorted(a.values) == sorted(evaluate_labeled(ens, p).tolist())
    assert a.values != tuple(evaluate_labeled(ens, p))


@settings(max_examples=30, deadline=None)
@given(st.integers(4, 9), st.sampled_from(["path", "loop"]), st.integers(2, 3), st.integers(0, 5),
       st.integers(0, 10_000))
def test_trilateration_ensemble_structure(n, mode, b, extra, seed):
    ens = build_trilateration_ensemble(n, 2, mode, extra=extra, b=b, seed=seed)
    assert len(ens) == 6 + 3 * (n - 4) + extra
    assert all(f.is_bounded(b) and f.is_whole for f in ens.functionals)
    order = find_trilateration_order(ens.functionals[:len(ens) - extra], n, 2, mode)
    assert order is not None and sorted(order) == list(range(n))


def test_restricted_ensemble_uses_one_hub():
    ens = build_trilateration_ensemble(6, 3, "loop", extra=4, b=2, seed=2, restricted=True)
    hubs = set.intersection(*[set(w.vertices) for w in ens.walks])
    assert len(hubs) == 1
    assert all(len(w.vertices) in (3, 4) for w in ens.walks)
    with pytest.raises(ValueError):
        build_trilateration_ensemble(6, 2, "loop", b=1)
    with pytest.raises(ValueError):
        build_trilateration_ensemble(6, 3, "path", restricted=True)


def test_random_walks_bounded():
    rng = np.random.default_rng(0)
    for mode in ("path", "loop"):
        for w in random_walks(6, 50, mode, 3, rng):
            assert max(w.edges.values()) <= 3
            assert sum(w.edges.values()) <= 6
            assert (w.kind == "loop") == (mode == "loop")


def test_scaled_ensemble_scales_values():
    p = sample_pseudo_generic(5, 2, 0)
    ens = build_trilateration_ensemble(5, 2, "path", extra=2, b=2, seed=0)
    assert np.allclose(evaluate_labeled(scaled_ensemble(ens, 3), p), 3 * evaluate_labeled(ens, p))


def test_one_dimensional_ambiguity():
    # p: three points with p3-p2 < p2-p1, measured by the three edges
    p = np.array([[0.0], [0.7], [1.1]])
    v_alpha = [p[1, 0] - p[0, 0], p[2, 0] - p[1, 0], p[2, 0] - p[0, 0]]
    q1 = 0.25
    q = np.array([[q1], [q1 + (p[1, 0] - p[0, 0]) - 0.5 * (p[2, 0] - p[0, 0])], [q1 + 0.5 * (p[2, 0] - p[0, 0])]])
    alpha = MeasurementEnsemble.from_walks([Walk((0, 1)), Walk((1, 2)), Walk((0, 2))], 3, "path")
    beta = MeasurementEnsemble.from_walks([Walk((1, 0, 2)), Walk((1, 2)), Walk((0, 2, 0))], 3, "path")
    va = evaluate_labeled(alpha, p)
    vb = evaluate_labeled(beta, q)
    assert np.allclose(va, v_alpha)
    assert np.allclose(va, vb, rtol=1e-15)
    # same values, but q is not similar to p
    ratio = np.sort(edge_lengths(q)) / np.sort(edge_lengths(p))
    assert np.ptp(ratio) > 0.1
