"""Walks, length functionals, measurement ensembles and their evaluation.

Vertices are 0-based. A walk's length depends only on its edge multiset, so
two walks compare equal whenever they use the same edges the same number of
times.
"""

from __future__ import annotations

import itertools
from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np

from .errors import IndexOutOfRange
from .geometry import Configuration, edge_index, edge_lengths, n_edges

MODES = ("path", "loop", "edge")


@dataclass(frozen=True, eq=False)
class Walk:
    vertices: tuple

    def __post_init__(self):
        verts = tuple(int(v) for v in self.vertices)
        if len(verts) < 2:
            raise ValueError("a walk needs at least one edge")
        if any(v < 0 for v in verts):
            raise ValueError("vertex indices are non-negative")
        if any(a == b for a, b in zip(verts, verts[1:])):
            raise ValueError(f"walk {verts} repeats a vertex immediately")
        object.__setattr__(self, "vertices", verts)

    @property
    def kind(self) -> str:
        return "loop" if self.vertices[0] == self.vertices[-1] else "path"

    @property
    def edges(self) -> Counter:
        return Counter(tuple(sorted(e)) for e in zip(self.vertices, self.vertices[1:]))

    def __eq__(self, other):
        if not isinstance(other, Walk):
            return NotImplemented
        return self.edges == other.edges

    def __hash__(self):
        return hash(frozenset(self.edges.items()))

    def __repr__(self):
        return f"Walk({list(self.vertices)})"

    @classmethod
    def ping(cls, i, j):
        return cls((i, j, i))

    @classmethod
    def triangle(cls, i, j, k):
        return cls((i, j, k, i))

    @classmethod
    def edge(cls, i, j):
        return cls((i, j))


@dataclass(frozen=True)
class LengthFunctional:
    """Rational coefficients over the N edges of K_n (colex order)."""

    coefficients: tuple
    n: int

    def __post_init__(self):
        coeffs = tuple(Fraction(c) for c in self.coefficients)
        coeffs = tuple(int(c) if c.denominator == 1 else c for c in coeffs)
        if len(coeffs) != n_edges(self.n):
            raise ValueError(f"need {n_edges(self.n)} coefficients for n={self.n}")
        object.__setattr__(self, "coefficients", coeffs)

    def is_bounded(self, b: int) -> bool:
        return all(abs(c) <= b for c in self.coefficients)

    @property
    def is_whole(self) -> bool:
        return all(isinstance(c, int) and c >= 0 for c in self.coefficients)

    @property
    def degrees(self) -> list:
        deg = [0] * self.n
        for (i, j), c in zip(_edges(self.n), self.coefficients):
            deg[i] += c
            deg[j] += c
        return deg

    def as_array(self) -> np.ndarray:
        return np.array([float(c) for c in self.coefficients])

    def value(self, config) -> float:
        lengths = edge_lengths(config)
        if lengths.size != len(self.coefficients):
            raise IndexOutOfRange(f"functional on K_{self.n} applied to {lengths.size} edges")
        return float(self.as_array() @ lengths)

    def scaled(self, s: int) -> "LengthFunctional":
        return LengthFunctional(tuple(s * c for c in self.coefficients), self.n)

    def relabeled(self, perm: Sequence[int], n: int | None = None) -> "LengthFunctional":
        """Move vertex ``i`` to ``perm[i]`` (target size ``n`` defaults to len(perm))."""
        n = len(perm) if n is None else n
        out = [0] * n_edges(n)
        for (i, j), c in zip(_edges(self.n), self.coefficients):
            if c:
                out[edge_index(perm[i], perm[j])] += c
        return LengthFunctional(tuple(out), n)

    def support(self) -> dict:
        return {e: c for e, c in zip(_edges(self.n), self.coefficients) if c}


def _edges(n):
    return [(i, j) for j in range(n) for i in range(j)]


@dataclass(frozen=True)
class MeasurementEnsemble:
    functionals: tuple
    mode: str
    walks: tuple = field(default=(), compare=False)

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}")
        object.__setattr__(self, "functionals", tuple(self.functionals))
        object.__setattr__(self, "walks", tuple(self.walks))
        if self.mode == "loop":
            for f in self.functionals:
                if any(deg % 2 for deg in f.degrees):
                    raise ValueError("loop ensembles need even degree at every vertex")

    def __len__(self):
        return len(self.functionals)

    @classmethod
    def from_walks(cls, walks: Iterable[Walk], n: int, mode: str) -> "MeasurementEnsemble":
        walks = tuple(walks)
        return cls(tuple(walk_to_functional(w, n) for w in walks), mode, walks)


@dataclass(frozen=True)
class UnlabeledDataSet:
    values: tuple
    dimension: int
    bound: int
    mode: str = "path"

    def __post_init__(self):
        vals = tuple(float(v) for v in self.values)
        if any(v < 0 or not np.isfinite(v) for v in vals):
            raise ValueError("data values must be finite and non-negative")
        object.__setattr__(self, "values", vals)
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}")

    def __len__(self):
        return len(self.values)


def walk_to_functional(w: Walk, n: int | None = None) -> LengthFunctional:
    """Edge multiplicities of a walk as a whole length functional."""
    if n is None:
        n = max(w.vertices) + 1
    if max(w.vertices) >= n:
        raise IndexOutOfRange(f"walk {w} does not fit in K_{n}")
    coeffs = [0] * n_edges(n)
    for (i, j), c in w.edges.items():
        coeffs[edge_index(i, j)] = c
    return LengthFunctional(tuple(coeffs), n)


def shuffle_order(k: int, seed: int) -> np.ndarray:
    """Deterministic permutation used when writing unlabeled values."""
    return np.random.default_rng([seed, 0x5EED]).permutation(k)


def evaluate_labeled(ensemble: MeasurementEnsemble, config) -> np.ndarray:
    """Values in ensemble order (ground truth; carries labels implicitly)."""
    if not isinstance(config, Configuration):
        config = Configuration(config)
    if not len(ensemble):
        return np.zeros(0)
    n = ensemble.functionals[0].n
    if any(f.n != n for f in ensemble.functionals):
        raise ValueError("ensemble mixes vertex counts")
    if n > config.n:
        raise IndexOutOfRange(f"ensemble over {n} vertices, configuration has {config.n}")
    lengths = edge_lengths(config)[:n_edges(n)]
    return ensemble_matrix(ensemble.functionals).astype(float) @ lengths


def evaluate(ensemble: MeasurementEnsemble, config, seed: int = 0, *,
             dimension: int | None = None, bound: int | None = None) -> UnlabeledDataSet:
    vals = evaluate_labeled(ensemble, config)
    vals = vals[shuffle_order(vals.size, seed)]
    if dimension is None:
        dimension = config.dimension if isinstance(config, Configuration) else np.shape(config)[1]
    if bound is None:
        bound = max((max(abs(c) for c in f.coefficients) for f in ensemble.functionals), default=1)
    return UnlabeledDataSet(tuple(vals), int(dimension), int(bound), ensemble.mode)


def ensemble_matrix(subset: Sequence[LengthFunctional]) -> np.ndarray:
    """Stack functionals row-wise (k x N); integer dtype when possible."""
    subset = list(subset)
    if not subset:
        return np.zeros((0, 0), dtype=int)
    n = subset[0].n
    if any(f.n != n for f in subset):
        raise ValueError("functionals over different vertex counts")
    rows = [f.coefficients for f in subset]
    if all(isinstance(c, int) for row in rows for c in row):
        return np.array(rows, dtype=int).reshape(len(rows), n_edges(n))
    return np.array([[Fraction(c) for c in row] for row in rows], dtype=object)


def base_walks(d: int, vertices: Sequence[int], mode: str) -> list[Walk]:
    """Walks of a contained base K_{d+2} over ``vertices`` (hub first in loop mode).

    Loop rows follow the canonical order: for each further vertex j, the
    ping to j and then the triangles through every earlier non-hub vertex.
    """
    v = list(vertices)
    if len(v) != d + 2:
        raise ValueError(f"need {d + 2} vertices")
    if mode in ("path", "edge"):
        return [Walk.edge(v[i], v[j]) for j in range(d + 2) for i in range(j)]
    hub = v[0]
    out = []
    for j in range(1, d + 2):
        out.append(Walk.ping(hub, v[j]))
        for i in range(1, j):
            out.append(Walk.triangle(hub, v[i], v[j]))
    return out


def trilateration_walks(anchors: Sequence[int], new: int, mode: str) -> list[Walk]:
    """The d+1 walks tying ``new`` to ``anchors`` (anchors[0] is the ping hub)."""
    if mode in ("path", "edge"):
        return [Walk.edge(a, new) for a in anchors]
    hub = anchors[0]
    return [Walk.ping(hub, new)] + [Walk.triangle(hub, a, new) for a in anchors[1:]]


_N2_BASE = np.array([
    [2, 0, 0, 0, 0, 0],
    [0, 2, 0, 0, 0, 0],
    [1, 1, 1, 0, 0, 0],
    [0, 0, 0, 2, 0, 0],
    [1, 0, 0, 1, 1, 0],
    [0, 1, 0, 1, 0, 1],
])
_N2_TRILAT = np.array([
    [1, 0, 0, 0, 0, 0],
    [0, 1, 0, 0, 0, 0],
    [0, 0, 1, 0, 0, 0],
    [0, 0, 0, 2, 0, 0],
    [1, 0, 0, 1, 1, 0],
    [0, 1, 0, 1, 0, 1],
])


def _canonical_programmatic(kind: str, d: int) -> np.ndarray:
    n = d + 2
    verts = list(range(n))
    if kind == "base":
        walks = base_walks(d, verts, "loop")
        rows = [walk_to_functional(w, n).coefficients for w in walks]
    else:
        c = n_edges(d + 1)
        rows = [tuple(int(k == e) for k in range(n_edges(n))) for e in range(c)]
        rows += [walk_to_functional(w, n).coefficients
                 for w in trilateration_walks(verts[:d + 1], d + 1, "loop")]
    return np.array(rows, dtype=int)


def canonical_matrix(kind: str, d: int) -> np.ndarray:
    """The canonical D x D loop matrix: ``"base"`` (N^d_1) or ``"trilat"`` (N^d_2)."""
    if kind not in ("base", "trilat"):
        raise ValueError("kind is 'base' or 'trilat'")
    if d < 2:
        raise ValueError("canonical matrices are defined for d >= 2")
    if d == 2:
        return (_N2_BASE if kind == "base" else _N2_TRILAT).copy()
    return _canonical_programmatic(kind, d)


def _random_walk(rng, n, n_steps, closed):
    while True:
        seq = [int(rng.integers(n))]
        for _ in range(n_steps - (1 if closed else 0)):
            nxt = int(rng.integers(n - 1))
            seq.append(nxt + (nxt >= seq[-1]))
        if closed:
            if seq[-1] == seq[0]:
                continue
            seq.append(seq[0])
        elif seq[-1] == seq[0]:
            continue
        return Walk(tuple(seq))


def random_walks(n: int, count: int, mode: str, b: int, rng, *, hub: int | None = None):
    """``count`` random b-bounded walks with at most 2b edges.

    With ``hub`` set, only pings and triangles through ``hub`` are drawn.
    """
    out = []
    while len(out) < count:
        if hub is not None:
            others = [v for v in range(n) if v != hub]
            if rng.random() < 0.5 or len(others) < 2:
                w = Walk.ping(hub, others[int(rng.integers(len(others)))])
            else:
                a, c = rng.choice(others, size=2, replace=False)
                w = Walk.triangle(hub, int(a), int(c))
        elif mode == "loop":
            w = _random_walk(rng, n, int(rng.integers(2, 2 * b + 1)), True)
        else:
            w = _random_walk(rng, n, int(rng.integers(1, 2 * b + 1)), False)
        if max(w.edges.values()) <= b:
            out.append(w)
    return out


def build_trilateration_ensemble(n: int, d: int, mode: str, extra: int = 0, b: int = 2,
                                 seed: int = 0, *, restricted: bool = False) -> MeasurementEnsemble:
    """A b-bounded ensemble that allows for trilateration, plus ``extra`` random walks.

    The vertex order is drawn from ``seed``. In loop mode every trilateration
    step pings from its first anchor; with ``restricted`` that anchor is
    always the base hub and the extra walks are pings/triangles through it.
    """
    if mode not in ("path", "loop"):
        raise ValueError("mode must be 'path' or 'loop'")
    if d < 1 or n < d + 2:
        raise ValueError(f"need n >= d + 2, got n={n}, d={d}")
    if extra < 0 or b < 1:
        raise ValueError("extra must be >= 0 and b >= 1")
    if mode == "loop" and b < 2:
        raise ValueError("loop ensembles need b >= 2 (a ping uses its edge twice)")
    if restricted and mode != "loop":
        raise ValueError("the restricted ensemble is a loop ensemble")
    rng = np.random.default_rng(seed)
    order = [int(v) for v in rng.permutation(n)]
    hub = order[0]
    walks = base_walks(d, order[:d + 2], mode)
    for pos in range(d + 2, n):
        earlier = order[:pos]
        if restricted:
            rest = [v for v in earlier if v != hub]
            anchors = [hub] + [int(v) for v in rng.choice(rest, size=d, replace=False)]
        else:
            anchors = [int(v) for v in rng.choice(earlier, size=d + 1, replace=False)]
        walks += trilateration_walks(anchors, order[pos], mode)
    walks += random_walks(n, extra, mode, b, rng, hub=hub if restricted else None)
    return MeasurementEnsemble.from_walks(walks, n, mode)


def scaled_ensemble(ensemble: MeasurementEnsemble, s: int) -> MeasurementEnsemble:
    """The s-scaled ensemble: every edge used ``s`` times as often."""
    return MeasurementEnsemble(tuple(f.scaled(s) for f in ensemble.functionals), ensemble.mode)


def find_trilateration_order(functionals: Sequence[LengthFunctional], n: int, d: int, mode: str):
    """Search for a vertex order under which the ensemble allows for trilateration.

    Returns the order (base vertices first, hub first in loop mode) or None.
    """
    present = set(functionals)

    def has(walks):
        return all(walk_to_functional(w, n) in present for w in walks)

    for base in itertools.combinations(range(n), d + 2):
        hubs = base if mode == "loop" else base[:1]
        for hub in hubs:
            verts = [hub] + [v for v in base if v != hub]
            if not has(base_walks(d, verts, mode)):
                continue
            placed = list(verts)
            grew = True
            while grew and len(placed) < n:
                grew = False
                for new in range(n):
                    if new in placed:
                        continue
                    if _tied(new, placed, d, mode, has):
                        placed.append(new)
                        grew = True
            if len(placed) == n:
                return placed
    return None


def _tied(new, placed, d, mode, has):
    if mode in ("path", "edge"):
        for anchors in itertools.combinations(placed, d + 1):
            if has(trilateration_walks(anchors, new, mode)):
                return True
        return False
    for hub in placed:
        rest = [v for v in placed if v != hub]
        for others in itertools.combinations(rest, d):
            if has(trilateration_walks((hub,) + others, new, mode)):
                return True
    return False
