"""Reconstruction of a point configuration from unlabeled measurement values.

The engine searches for ordered value tuples that describe a K_{d+2}
(base tuples), grows every accepted base by trilateration one point at a
time, and finally keeps the largest candidate of smallest size. Rejection
of a tuple is a value, not an exception; only the final outcome can raise.
"""

from __future__ import annotations

import itertools
from collections import Counter
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from . import _search
from .errors import (AmbiguousResult, BudgetExceeded, ContractError, DegenerateBase, Inconsistent,
                     NoBaseFound, NotRealizable, RankTooHigh, SizeMismatch, UnsupportedDimension)
from .geometry import (Configuration, canonical_pose, distance_matrix, edge_index, edge_lengths,
                       n_edges, realize_simplex, trilaterate_point)
from .measurement import (LengthFunctional, UnlabeledDataSet, Walk, base_walks, canonical_matrix,
                          trilateration_walks)
from .rank import integer_relation_search, rank_bypass_restricted_3d, rational_rank_2d
from .variety import is_singular_L24, on_L

D1_REFUSAL = ("d=1 is not supported: on the line, three edge lengths of p can equal three path "
              "lengths of a non-similar q, because the 1D length variety is reducible")


@dataclass(frozen=True)
class ReconstructionOptions:
    membership_tol: float = 1e-7
    match_tol: float = 1e-9        # relative to the largest data value
    label_tol: float = 1e-10
    rank_tol: float = 1e-9
    singular_tol: float = 1e-6
    restricted_3d: bool = False
    label: bool = True
    max_label_edges: int | None = None   # defaults to 2b


@dataclass(frozen=True)
class TupleTest:
    accepted: bool
    stage: str
    config: Configuration | None = None
    scale: float = 1.0
    point: np.ndarray | None = None
    residual: float = float("nan")

    def __bool__(self):
        return self.accepted


@lru_cache(maxsize=8)
def _inverse(kind, d):
    return np.linalg.inv(canonical_matrix(kind, d).astype(float))


def _rank_check(w, l, d, b, opts, known_independent=False):
    """None when the rank certificate holds, else the failing stage name."""
    if d == 2:
        sing = is_singular_L24(l, opts.singular_tol)
        rep = rational_rank_2d(w, b, opts.rank_tol, sing, known_independent=known_independent)
        return None if rep.certified_full else "rank"
    if opts.restricted_3d:
        rep = rank_bypass_restricted_3d(w, assume_restricted=True, tol=opts.rank_tol)
        return None if rep.certified_full else "rank"
    try:
        rel = integer_relation_search(w, b ** (w.size - 1), opts.rank_tol)
    except BudgetExceeded:
        return "rank-budget"
    return None if rel is None else "rank"


def test_base_tuple(w, d: int, mode: str, b: int, opts: ReconstructionOptions | None = None) -> TupleTest:
    """Decide whether an ordered D-tuple measures a K_{d+2} in canonical row order.

    Path/edge tuples are read as the edge lengths in colex order; loop
    tuples follow the canonical base matrix. Accepted tuples come back as a
    canonical-pose simplex at scale 1.
    """
    opts = opts or ReconstructionOptions()
    w = np.asarray(w, dtype=float)
    if w.size != n_edges(d + 2):
        raise SizeMismatch(f"a base tuple for d={d} has {n_edges(d + 2)} values")
    l = _inverse("base", d) @ w if mode == "loop" else w
    if np.any(l <= 0):
        return TupleTest(False, "positivity")
    ok, resid = on_L(l, d, opts.membership_tol)
    if not ok:
        return TupleTest(False, "membership", residual=resid)
    stage = _rank_check(w, l, d, b, opts)
    if stage:
        return TupleTest(False, stage, residual=resid)
    try:
        config = realize_simplex(l * l, d, tol=opts.membership_tol)
    except (NotRealizable, RankTooHigh):
        return TupleTest(False, "realize", residual=resid)
    return TupleTest(True, "accepted", config, 1.0, residual=resid)


def test_growth_tuple(base, w, mode: str, b: int = 2, scale: float = 1.0,
                      opts: ReconstructionOptions | None = None) -> TupleTest:
    """Place a new point from d+1 values tying it to ``base`` (hub first in loop mode)."""
    opts = opts or ReconstructionOptions()
    base = np.asarray(base, dtype=float)
    d = base.shape[1]
    w = np.asarray(w, dtype=float) / scale
    if base.shape[0] != d + 1 or w.size != d + 1:
        raise SizeMismatch(f"need {d + 1} base points and {d + 1} values")
    full = np.concatenate([edge_lengths(base), w])
    l = _inverse("trilat", d) @ full if mode == "loop" else full
    c = n_edges(d + 1)
    if np.any(l[c:] <= 0):
        return TupleTest(False, "positivity")
    ok, resid = on_L(l, d, opts.membership_tol)
    if not ok:
        return TupleTest(False, "membership", residual=resid)
    stage = _rank_check(full, l, d, b, opts, known_independent=True)
    if stage:
        return TupleTest(False, stage, residual=resid)
    try:
        point = trilaterate_point(base, l[c:] ** 2, tol=max(opts.membership_tol, 1e-8))
    except (DegenerateBase, Inconsistent):
        return TupleTest(False, "trilaterate", residual=resid)
    return TupleTest(True, "accepted", point=point, residual=resid)


# keep pytest from collecting these when a test module imports them
test_base_tuple.__test__ = False
test_growth_tuple.__test__ = False


@dataclass
class CandidateReconstruction:
    points: list
    claims: dict = field(default_factory=dict)          # sorted data position -> edge Counter
    scale_hypothesis: float = 1.0
    provenance: list = field(default_factory=list)      # per step: (positions, walks)

    @property
    def n(self):
        return len(self.points)

    @property
    def claimed_values(self):
        return set(self.claims)

    def array(self):
        return np.array(self.points, dtype=float)

    def size(self):
        p = self.array()
        return float(np.sqrt(np.mean(np.sum((p - p.mean(axis=0)) ** 2, axis=1))))


@dataclass(frozen=True)
class ReconstructionResult:
    n: int
    configuration: Configuration
    mode: str
    functionals: tuple          # per data index: LengthFunctional or None
    diagnostics: dict
    scale: float = 1.0

    @property
    def claimed_values(self):
        return {i for i, f in enumerate(self.functionals) if f is not None}

    def residuals(self, data) -> np.ndarray:
        """Relative misfit of every claimed value under its discovered functional."""
        vals = np.asarray(data.values if isinstance(data, UnlabeledDataSet) else data, dtype=float)
        lengths = edge_lengths(self.configuration)
        top = max(float(np.max(np.abs(vals))), 1e-300)
        out = np.full(vals.size, np.nan)
        for i, f in enumerate(self.functionals):
            if f is not None:
                out[i] = abs(self.scale * float(f.as_array() @ lengths) - vals[i]) / top
        return out


def _walk_counter(walk: Walk) -> Counter:
    return Counter(walk.edges)


class _Engine:
    def __init__(self, data, mode, opts):
        self.data = data
        self.d = data.dimension
        self.b = data.bound
        self.mode = mode
        self.search_mode = "path" if mode == "edge" else mode
        self.opts = opts
        self.vi = _search.ValueIndex(data.values, opts.match_tol)
        self.v = self.vi.sorted
        self.diag = Counter()
        self.rejected = Counter()

    def base_proposals(self):
        if self.d == 2:
            gen = _search.base_proposals_loop2 if self.search_mode == "loop" else _search.base_proposals_path2
        else:
            gen = _search.base_proposals_loop3
        props = gen(self.vi)
        props.sort(key=lambda p: (p[0], p[1]))
        return [p[1] for p in props]

    def run(self):
        cands = []
        for prop in self.base_proposals():
            self.diag["base_proposals"] += 1
            if any(set(prop) <= set(c.claims) for c in cands):
                self.diag["base_skipped"] += 1
                continue
            self.diag["base_tests"] += 1
            res = test_base_tuple(self.v[list(prop)], self.d, self.search_mode, self.b, self.opts)
            if not res:
                self.rejected[res.stage] += 1
                continue
            self.diag["base_accepted"] += 1
            cand = CandidateReconstruction(list(res.config.points))
            walks = base_walks(self.d, list(range(self.d + 2)), self.search_mode)
            for pos, w in zip(prop, walks):
                cand.claims[pos] = _walk_counter(w)
            cand.provenance.append((tuple(prop), walks))
            self.absorb(cand)
            self.grow(cand)
            cands.append(cand)
        return cands

    def free(self, cand):
        return [p for p in range(self.v.size) if p not in cand.claims]

    def grow(self, cand):
        while True:
            free = self.free(cand)
            props = _search.growth_proposals(cand.array(), self.vi, free, self.search_mode, self.d)
            props.sort(key=lambda p: (p[0], p[1], p[2]))
            placed = False
            for _, anchors, positions in props:
                self.diag["growth_tests"] += 1
                pts = cand.array()
                res = test_growth_tuple(pts[list(anchors)], self.v[list(positions)], self.search_mode,
                                        self.b, cand.scale_hypothesis, self.opts)
                if not res:
                    self.rejected["growth-" + res.stage] += 1
                    continue
                new = cand.n
                cand.points.append(res.point)
                walks = trilateration_walks(anchors, new, self.search_mode)
                for pos, w in zip(positions, walks):
                    cand.claims[pos] = _walk_counter(w)
                cand.provenance.append((tuple(positions), walks))
                self.absorb(cand)
                placed = True
                break
            if not placed:
                return

    def absorb(self, cand):
        """Claim free values explained by edges (path) or pings/triangles (loop) of the candidate."""
        pts = cand.array()
        m = pts.shape[0]
        dm = distance_matrix(pts)
        preds, labels = [], []
        for i, j in itertools.combinations(range(m), 2):
            if self.search_mode == "loop":
                preds.append(2 * dm[i, j])
                labels.append(Counter({(i, j): 2}))
            else:
                preds.append(dm[i, j])
                labels.append(Counter({(i, j): 1}))
        if self.search_mode == "loop":
            for i, j, k in itertools.combinations(range(m), 3):
                preds.append(dm[i, j] + dm[i, k] + dm[j, k])
                labels.append(Counter({(i, j): 1, (i, k): 1, (j, k): 1}))
        lo, hi = self.vi.lookup(np.array(preds) * cand.scale_hypothesis)
        for t in range(len(preds)):
            for pos in range(lo[t], hi[t]):
                if pos not in cand.claims:
                    cand.claims[pos] = labels[t]


def _are_congruent(a, b, tol=1e-6):
    da = np.sort(distance_matrix(a)[np.triu_indices(a.shape[0], 1)])
    db = np.sort(distance_matrix(b)[np.triu_indices(b.shape[0], 1)])
    return da.shape == db.shape and np.all(np.abs(da - db) <= tol * max(da.max(), 1e-300))


@lru_cache(maxsize=16)
def _edge_multisets(n_e, half, b):
    rows = [np.zeros(n_e, dtype=np.int8)]
    for t in range(1, half + 1):
        for combo in itertools.combinations_with_replacement(range(n_e), t):
            row = np.bincount(combo, minlength=n_e).astype(np.int8)
            if row.max() <= b:
                rows.append(row)
    arr = np.array(rows)
    arr.setflags(write=False)
    return arr


def _valid_walk(coeffs, n, mode):
    edges = [(i, j) for j in range(n) for i in range(j)]
    deg = np.zeros(n, dtype=int)
    adj = {}
    for (i, j), c in zip(edges, coeffs):
        if c:
            deg[i] += c
            deg[j] += c
            adj.setdefault(i, set()).add(j)
            adj.setdefault(j, set()).add(i)
    if not adj:
        return False
    odd = int(np.sum(deg % 2))
    if mode == "loop" and odd != 0:
        return False
    if mode == "path" and odd not in (0, 2):
        return False
    if mode == "edge" and (int(np.sum(coeffs)) != 1):
        return False
    start = next(iter(adj))
    seen, stack = {start}, [start]
    while stack:
        for u in adj[stack.pop()]:
            if u not in seen:
                seen.add(u)
                stack.append(u)
    return len(seen) == len(adj)


def identify_functional(value, config, mode, b, max_edges=None, tol=1e-10):
    """The unique b-bounded whole walk functional whose value on ``config`` matches.

    Meet-in-the-middle over edge multisets of at most ``max_edges`` edges
    (default 2b). ``tol`` is absolute. Returns None when no functional or
    several indistinguishable ones fit.
    """
    pts = config.points if isinstance(config, Configuration) else np.asarray(config, float)
    n = pts.shape[0]
    lengths = edge_lengths(pts)
    max_edges = 2 * b if max_edges is None else max_edges
    if mode == "edge":
        max_edges, b = 1, 1
    half = (max_edges + 1) // 2
    table = _edge_multisets(lengths.size, half, b)
    sums = table @ lengths
    order = np.argsort(sums)
    ssum = sums[order]
    target = value - sums
    lo = np.searchsorted(ssum, target - tol, side="left")
    hi = np.searchsorted(ssum, target + tol, side="right")
    found = {}
    for a in np.nonzero(hi > lo)[0]:
        for k in range(lo[a], hi[a]):
            coeffs = table[a].astype(int) + table[order[k]]
            if coeffs.sum() > max_edges or coeffs.max() > b:
                continue
            key = tuple(int(c) for c in coeffs)
            if key in found or not _valid_walk(key, n, mode):
                continue
            found[key] = abs(float(np.dot(key, lengths)) - value)
    if not found:
        return None
    ranked = sorted(found.items(), key=lambda kv: kv[1])
    if len(ranked) > 1 and ranked[0][1] >= 0.01 * ranked[1][1]:
        return None
    return LengthFunctional(ranked[0][0], n)


def _counter_to_functional(counter, n):
    coeffs = [0] * n_edges(n)
    for (i, j), c in counter.items():
        coeffs[edge_index(min(i, j), max(i, j))] += c
    return LengthFunctional(tuple(coeffs), n)


def _check_request(data, mode, opts):
    if mode not in ("path", "loop", "edge"):
        raise ValueError(f"unknown mode {mode!r}")
    d = data.dimension
    if d == 1:
        raise UnsupportedDimension(D1_REFUSAL)
    if d == 3:
        if not opts.restricted_3d:
            raise UnsupportedDimension("d=3 reconstruction needs the restricted-ensemble flag "
                                       "(pings and triangles through one hub)")
        if mode != "loop":
            raise UnsupportedDimension("restricted d=3 reconstruction works on loop ensembles")
    elif d != 2:
        raise UnsupportedDimension(f"dimension {d} is not supported (d must be 2, or 3 restricted)")
    if mode == "loop" and data.bound < 2:
        raise ContractError("loop data needs bound >= 2")


def reconstruct(data: UnlabeledDataSet, mode: str | None = None,
                opts: ReconstructionOptions | None = None) -> ReconstructionResult:
    """Recover (n, configuration) from unlabeled values.

    Returns the candidate with the most points and, among those, the
    smallest size; the configuration is in canonical pose.
    """
    opts = opts or ReconstructionOptions()
    mode = mode or data.mode
    if opts.restricted_3d and data.dimension != 3:
        raise ContractError("the restricted flag only applies to d=3")
    _check_request(data, mode, opts)
    eng = _Engine(data, mode, opts)
    cands = eng.run()
    if not cands:
        raise NoBaseFound(f"no base tuple among {len(data)} values passed "
                          f"({dict(eng.rejected)})")
    top_n = max(c.n for c in cands)
    top = [c for c in cands if c.n == top_n]
    sizes = np.array([c.size() for c in top])
    s0 = float(sizes.min())
    smallest = [c for c, s in zip(top, sizes) if s <= s0 * (1 + 1e-6)]
    chosen = smallest[0]
    for other in smallest[1:]:
        if not _are_congruent(chosen.array(), other.array()):
            raise AmbiguousResult(f"{len(smallest)} non-congruent maximal candidates share the smallest scale")

    config = canonical_pose(chosen.array())
    n = config.n
    funcs = [None] * len(data)
    order = eng.vi.order
    for pos, counter in chosen.claims.items():
        funcs[int(order[pos])] = _counter_to_functional(counter, n)
    if opts.label:
        top_val = float(eng.v[-1])
        for pos in range(eng.v.size):
            if pos in chosen.claims:
                continue
            f = identify_functional(float(eng.v[pos]), config, mode, data.bound,
                                    opts.max_label_edges, opts.label_tol * top_val)
            if f is not None:
                funcs[int(order[pos])] = f
    claimed = sum(f is not None for f in funcs)
    diagnostics = dict(eng.diag)
    diagnostics.update(
        rejected=dict(eng.rejected),
        candidates=len(cands),
        claimed=claimed,
        unexplained=len(data) - claimed,
        candidate_scales=sorted(float(s / s0) for s in sizes),
    )
    return ReconstructionResult(n, config, mode, tuple(funcs), diagnostics, chosen.scale_hypothesis)


def reconstruct_edges_complete(data: UnlabeledDataSet, n: int, d: int | None = None, *,
                               squared: bool = False,
                               opts: ReconstructionOptions | None = None) -> ReconstructionResult:
    """Recover n points from all N of their (shuffled) edge lengths."""
    d = data.dimension if d is None else d
    if len(data) != n_edges(n):
        raise SizeMismatch(f"{n} points have {n_edges(n)} edges, got {len(data)} values")
    vals = np.sqrt(np.asarray(data.values)) if squared else np.asarray(data.values)
    edge_data = UnlabeledDataSet(tuple(vals), d, 1, "edge")
    return reconstruct(edge_data, "edge", opts)
