import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import best_matches, labels_match
from unlabeled_rigidity import reconstruction as rc
from unlabeled_rigidity.errors import AmbiguousResult, NoBaseFound, SizeMismatch, UnsupportedDimension
from unlabeled_rigidity.geometry import edge_lengths, sample_pseudo_generic
from unlabeled_rigidity.measurement import (MeasurementEnsemble, UnlabeledDataSet, Walk,
                                            build_trilateration_ensemble, evaluate, scaled_ensemble,
                                            shuffle_order, walk_to_functional)


def test_base_tuple_veridical_and_wrong_orders():
    p = sample_pseudo_generic(4, 2, 0)
    l = edge_lengths(p)
    res = rc.test_base_tuple(l, 2, "path", 2)
    assert res.accepted
    assert best_matches(p, res.config)[0][1] < 1e-10
    rng = np.random.default_rng(0)
    # relabelings of K_4 permute the six edges in 24 ways; any other order should fail
    from unlabeled_rigidity.symmetry import relabeling_matrices
    relabel = {tuple(np.argmax(m.to_float(), axis=1)) for m in relabeling_matrices()}
    rejected = 0
    while rejected < 500:
        perm = tuple(rng.permutation(6))
        if perm in relabel:
            continue
        res = rc.test_base_tuple(l[list(perm)], 2, "path", 2)
        assert not res.accepted and res.stage in ("membership", "realize", "positivity")
        rejected += 1


def test_base_tuple_loop_mode():
    from unlabeled_rigidity.measurement import canonical_matrix
    p = sample_pseudo_generic(4, 2, 5)
    w = canonical_matrix("base", 2) @ edge_lengths(p)
    res = rc.test_base_tuple(w, 2, "loop", 2)
    assert res.accepted and best_matches(p, res.config)


def test_base_tuple_345_rejected_by_rank():
    for t in (1.0, 0.5, 3.3):
        res = rc.test_base_tuple(t * np.array([3, 4, 5, 5, 4, 3.0]), 2, "path", 2)
        assert not res.accepted and res.stage == "rank"
    with pytest.raises(SizeMismatch):
        rc.test_base_tuple(np.ones(5), 2, "path", 2)


def test_growth_tuple_examples():
    base = np.array([[0.0, 0.0], [4.0, 0.0], [0.0, 3.0]])
    new = np.array([4.0, 3.0])
    d = lambda a, b: float(np.linalg.norm(a - b))
    # ping hub->new, then the triangles hub, base1, new and hub, base2, new
    w = [2 * d(base[0], new),
         d(base[0], base[1]) + d(base[1], new) + d(new, base[0]),
         d(base[0], base[2]) + d(base[2], new) + d(new, base[0])]
    assert w == [10.0, 12.0, 12.0]
    res = rc.test_growth_tuple(base, w, "loop")
    assert res.accepted and np.allclose(res.point, new)
    res = rc.test_growth_tuple(base, [5.0, 3.0, 4.0], "path")
    assert res.accepted and np.allclose(res.point, new)
    res = rc.test_growth_tuple(base, [20.0, 24.0, 24.0], "loop", scale=2.0)
    assert res.accepted and np.allclose(res.point, new)


def test_growth_tuple_rejects_perturbed_ping():
    for seed in range(100):
        pts = sample_pseudo_generic(4, 2, seed).points
        base, new = pts[:3], pts[3]
        d = lambda a, b: float(np.linalg.norm(a - b))
        w = np.array([2 * d(base[0], new),
                      d(base[0], base[1]) + d(base[1], new) + d(new, base[0]),
                      d(base[0], base[2]) + d(base[2], new) + d(new, base[0])])
        assert rc.test_growth_tuple(base, w, "loop").accepted
        w[0] *= 1.05
        res = rc.test_growth_tuple(base, w, "loop")
        assert not res.accepted and res.stage in ("membership", "positivity")


def _simulate(n, mode, b, seed, extra=3, d=2, restricted=False):
    p = sample_pseudo_generic(n, d, seed)
    ens = build_trilateration_ensemble(n, d, mode, extra=extra, b=b, seed=seed, restricted=restricted)
    return p, ens, evaluate(ens, p, seed=seed, bound=b)


def test_reconstruct_loop_example():
    p, ens, data = _simulate(6, "loop", 2, 11)
    res = rc.reconstruct(data)
    assert res.n == 6 and res.mode == "loop"
    matches = best_matches(p, res.configuration)
    assert matches and min(r for _, r in matches) < 1e-7
    perm = shuffle_order(len(ens), 11)
    assert any(labels_match(res, ens, perm, idx) for idx, _ in matches)
    assert res.diagnostics["unexplained"] == 0
    assert res.diagnostics["base_tests"] >= 1


@settings(max_examples=25, deadline=None)
@given(st.integers(4, 7), st.sampled_from(["path", "loop"]), st.integers(2, 3), st.integers(0, 10_000))
def test_soundness(n, mode, b, seed):
    p, ens, data = _simulate(n, mode, b, seed)
    res = rc.reconstruct(data)
    resid = res.residuals(data)
    claimed = ~np.isnan(resid)
    assert claimed.any() and np.all(resid[claimed] < 1e-7)


def test_reconstruct_is_deterministic():
    _, _, data = _simulate(7, "path", 3, 4)
    a, b = rc.reconstruct(data), rc.reconstruct(data)
    assert np.array_equal(a.configuration.points, b.configuration.points)
    assert a.functionals == b.functionals and a.diagnostics == b.diagnostics


def test_scaled_only_data_gives_scaled_configuration():
    p, ens, _ = _simulate(6, "loop", 2, 4)
    for s in (2, 3):
        data = evaluate(scaled_ensemble(ens, s), p, seed=1, bound=2 * s)
        res = rc.reconstruct(data)
        assert res.n == 6
        # the data cannot tell s*p measured once from p measured s times
        assert best_matches(p.scaled(s), res.configuration)
        assert res.diagnostics["candidate_scales"] == [1.0]


def test_mixed_scales_pick_smallest():
    p, ens, _ = _simulate(6, "path", 2, 8)
    for s in (2, 3):
        mixed = MeasurementEnsemble(ens.functionals + scaled_ensemble(ens, s).functionals, "path")
        res = rc.reconstruct(evaluate(mixed, p, seed=2, bound=2 * s))
        matches = best_matches(p, res.configuration)
        assert res.n == 6 and matches and min(r for _, r in matches) < 1e-7
        assert np.allclose(res.diagnostics["candidate_scales"], [1.0, s])


def test_refusals():
    one_d = UnlabeledDataSet((0.7, 0.4, 1.1), 1, 1)
    with pytest.raises(UnsupportedDimension, match="d=1"):
        rc.reconstruct(one_d)
    _, _, data3 = _simulate(5, "loop", 2, 0, d=3, restricted=True)
    with pytest.raises(UnsupportedDimension):
        rc.reconstruct(data3)
    with pytest.raises(UnsupportedDimension):
        rc.reconstruct(UnlabeledDataSet(data3.values, 4, 2, "loop"))


def test_no_base_found():
    rng = np.random.default_rng(3)
    data = UnlabeledDataSet(tuple(rng.uniform(1, 2, 12)), 2, 2, "path")
    with pytest.raises(NoBaseFound):
        rc.reconstruct(data)


def test_ambiguous_result_is_surfaced():
    a = sample_pseudo_generic(4, 2, 1).points
    b = sample_pseudo_generic(4, 2, 2).points

    def rms(x):
        return np.sqrt(np.mean(np.sum((x - x.mean(axis=0)) ** 2, axis=1)))

    b = b * rms(a) / rms(b)
    data = UnlabeledDataSet(tuple(np.r_[edge_lengths(a), edge_lengths(b)]), 2, 1, "edge")
    with pytest.raises(AmbiguousResult):
        rc.reconstruct(data)


def test_edges_complete():
    for n, seed in [(5, 0), (6, 1)]:
        p = sample_pseudo_generic(n, 2, seed)
        vals = edge_lengths(p)[np.random.default_rng(seed).permutation(n * (n - 1) // 2)]
        res = rc.reconstruct_edges_complete(UnlabeledDataSet(tuple(vals), 2, 1, "edge"), n)
        assert res.n == n and min(r for _, r in best_matches(p, res.configuration)) < 1e-7
        assert all(sum(f.coefficients) == 1 for f in res.functionals)
        sq = UnlabeledDataSet(tuple(vals ** 2), 2, 1, "edge")
        res = rc.reconstruct_edges_complete(sq, n, squared=True)
        assert res.n == n and best_matches(p, res.configuration)
    with pytest.raises(SizeMismatch):
        rc.reconstruct_edges_complete(UnlabeledDataSet(tuple(vals[:-1]), 2, 1, "edge"), n)


def test_edges_with_one_missing_value():
    for seed in range(10):
        p = sample_pseudo_generic(6, 2, seed)
        vals = np.delete(edge_lengths(p), seed % 15)
        try:
            res = rc.reconstruct(UnlabeledDataSet(tuple(vals), 2, 1, "edge"))
        except NoBaseFound:
            continue
        assert [m for m in best_matches(p, res.configuration) if m[1] < 1e-7]


def test_identify_functional():
    p = sample_pseudo_generic(6, 2, 2)
    for walk in [Walk((0, 3, 1, 3, 5)), Walk((2, 4, 2, 1, 2)), Walk((1, 5))]:
        f = walk_to_functional(walk, 6)
        got = rc.identify_functional(f.value(p), p, "path", 3)
        assert got == f
    loop = walk_to_functional(Walk((0, 1, 2, 3, 0)), 6)
    assert rc.identify_functional(loop.value(p), p, "loop", 2) == loop
    assert rc.identify_functional(0.123456789, p, "path", 1) is None
