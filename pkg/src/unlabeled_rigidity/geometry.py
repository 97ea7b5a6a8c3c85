"""Point configurations, edge-length maps and labeled placement primitives.

Edges of K_n are indexed in colex order: ``(0,1), (0,2), (1,2), (0,3), ...``,
so the first ``k(k-1)/2`` coordinates always belong to the first ``k`` points.
For n = 4 this is the order 12, 13, 23, 14, 24, 34.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .errors import (
    DegenerateBase,
    Inconsistent,
    NotRealizable,
    RankTooHigh,
    ResampleExhausted,
    SizeMismatch,
)


def n_edges(n: int) -> int:
    return n * (n - 1) // 2


def edge_index(i: int, j: int) -> int:
    """Flat coordinate of edge {i, j} (0-based vertices)."""
    if i == j:
        raise ValueError("an edge needs two distinct vertices")
    if i > j:
        i, j = j, i
    return j * (j - 1) // 2 + i


def edge_list(n: int) -> list[tuple[int, int]]:
    """All edges of K_n in colex order."""
    return [(i, j) for j in range(n) for i in range(j)]


@dataclass(frozen=True)
class Configuration:
    """An ordered sequence of ``n`` points in ``R^d``."""

    points: np.ndarray

    def __post_init__(self):
        pts = np.array(self.points, dtype=float)
        if pts.ndim == 1:
            pts = pts[:, None]
        if pts.ndim != 2 or pts.shape[0] < 1 or pts.shape[1] < 1:
            raise ValueError(f"points must be an (n, d) array, got shape {pts.shape}")
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)

    @property
    def n(self) -> int:
        return self.points.shape[0]

    @property
    def dimension(self) -> int:
        return self.points.shape[1]

    def subconfiguration(self, index) -> "Configuration":
        return Configuration(self.points[list(index)])

    def scaled(self, s: float) -> "Configuration":
        return Configuration(s * self.points)

    def __len__(self):
        return self.n

    def __eq__(self, other):
        if not isinstance(other, Configuration):
            return NotImplemented
        return self.points.shape == other.points.shape and np.array_equal(self.points, other.points)

    def __hash__(self):
        return hash((self.points.shape, self.points.tobytes()))


@dataclass(frozen=True)
class AlignmentResult:
    rotation: np.ndarray
    translation: np.ndarray
    residual_rmsd: float


def _as_points(config) -> np.ndarray:
    if isinstance(config, Configuration):
        return config.points
    return Configuration(config).points


def squared_edge_lengths(config) -> np.ndarray:
    """Squared pairwise lengths ``m(p)`` in colex edge order."""
    pts = _as_points(config)
    n = pts.shape[0]
    out = np.empty(n_edges(n))
    k = 0
    for j in range(n):
        if j:
            diff = pts[:j] - pts[j]
            out[k:k + j] = np.einsum("ij,ij->i", diff, diff)
            k += j
    return out


def edge_lengths(config) -> np.ndarray:
    """Euclidean lengths ``l(p)`` in colex edge order (positive roots)."""
    return np.sqrt(squared_edge_lengths(config))


def distance_matrix(config) -> np.ndarray:
    pts = _as_points(config)
    diff = pts[:, None, :] - pts[None, :, :]
    return np.sqrt(np.einsum("ijk,ijk->ij", diff, diff))


def _affine_rank_ok(pts: np.ndarray, d: int, threshold: float) -> bool:
    for idx in itertools.combinations(range(pts.shape[0]), d + 1):
        sub = pts[list(idx)]
        sv = np.linalg.svd(sub[1:] - sub[0], compute_uv=False)
        if sv.size < d or sv[d - 1] <= threshold:
            return False
    return True


def _distances_distinct(pts: np.ndarray, rel: float) -> bool:
    lengths = np.sort(edge_lengths(pts))
    if lengths.size < 2:
        return bool(lengths.size == 0 or lengths[0] > 0)
    if lengths[0] <= rel * lengths[-1]:
        return False
    return bool(np.all(np.diff(lengths) > rel * lengths[-1]))


def sample_pseudo_generic(n: int, d: int, seed: int, box: float = 1.0,
                          *, max_attempts: int = 100) -> Configuration:
    """Seeded uniform sample in ``[0, box]^d`` with near-degeneracies rejected.

    Rejects draws where two pairwise distances agree to relative 1e-6 or
    some d+1 points have an affine span whose smallest singular value is
    below ``1e-9 * box``.
    """
    if n < 1 or d < 1:
        raise ValueError("need n >= 1 and d >= 1")
    if box <= 0:
        raise ValueError("box must be positive")
    rng = np.random.default_rng(seed)
    for _ in range(max_attempts):
        pts = rng.uniform(0.0, box, size=(n, d))
        if not _distances_distinct(pts, 1e-6):
            continue
        if n >= d + 1 and not _affine_rank_ok(pts, d, 1e-9 * box):
            continue
        return Configuration(pts)
    raise ResampleExhausted(
        f"no admissible configuration for n={n}, d={d}, box={box} after {max_attempts} draws")


def canonical_pose(config) -> Configuration:
    """First point at the origin, second on the positive first axis, and so on.

    Point k+1 (k < d) is placed in the span of the first k+1 axes with a
    positive k-th coordinate, which fixes the reflection as well.
    """
    pts = _as_points(config)
    n, d = pts.shape
    x = pts - pts[0]
    k = min(d, n - 1)
    if k == 0:
        return Configuration(x)
    q, r = np.linalg.qr(x[1:k + 1].T, mode="complete")
    signs = np.sign(np.diag(r))
    signs[signs == 0] = 1.0
    full = np.ones(d)
    full[:len(signs)] = signs
    q = q * full
    return Configuration(x @ q)


def _gram_from_squared(m: np.ndarray, n: int) -> np.ndarray:
    """Gram matrix of points 1..n-1 relative to the last point."""
    last = n - 1
    g = np.empty((last, last))
    to_last = np.array([m[edge_index(k, last)] for k in range(last)])
    for a in range(last):
        g[a, a] = to_last[a]
        for b in range(a + 1, last):
            g[a, b] = g[b, a] = 0.5 * (to_last[a] + to_last[b] - m[edge_index(a, b)])
    return g


def realize_from_squared(m, d: int, *, tol: float = 1e-7) -> Configuration:
    """Realize squared pairwise lengths of n points in R^d (classical MDS).

    Eigenvalues in ``(-tol*scale, 0)`` are clamped to zero. The result is in
    canonical pose.
    """
    m = np.asarray(m, dtype=float)
    n = int(round((1 + np.sqrt(1 + 8 * m.size)) / 2))
    if n_edges(n) != m.size:
        raise ValueError(f"{m.size} is not a number of edges of a complete graph")
    if n == 1:
        return Configuration(np.zeros((1, d)))
    g = _gram_from_squared(m, n)
    evals, evecs = np.linalg.eigh(g)
    order = np.argsort(evals)[::-1]
    evals, evecs = evals[order], evecs[:, order]
    scale = max(float(np.max(np.abs(evals))), float(np.max(np.abs(m))), 1e-300)
    if evals[-1] < -tol * scale:
        raise NotRealizable(f"Gram matrix has eigenvalue {evals[-1]:.3g}")
    if evals.size > d and evals[d] > tol * scale:
        raise RankTooHigh(f"Gram matrix has rank above {d} (eigenvalue {evals[d]:.3g})")
    k = min(d, evals.size)
    lam = np.clip(evals[:k], 0.0, None)
    coords = np.zeros((n, d))
    coords[:n - 1, :k] = evecs[:, :k] * np.sqrt(lam)
    return canonical_pose(coords)


def realize_simplex(squared_lengths, d: int, *, tol: float = 1e-7) -> Configuration:
    """Realize the D = (d+2)(d+1)/2 squared lengths of a K_{d+2} in R^d."""
    m = np.asarray(squared_lengths, dtype=float)
    if m.size != n_edges(d + 2):
        raise ValueError(f"expected {n_edges(d + 2)} squared lengths for d={d}, got {m.size}")
    return realize_from_squared(m, d, tol=tol)


def trilaterate_point(base, squared_dists, *, tol: float = 1e-8) -> np.ndarray:
    """Locate the point whose squared distances to d+1 base points are given.

    Raises ``DegenerateBase`` if the base does not span R^d and
    ``Inconsistent`` if no point fits all distances.
    """
    b = _as_points(base)
    r = np.asarray(squared_dists, dtype=float)
    d = b.shape[1]
    if b.shape[0] != d + 1 or r.size != d + 1:
        raise ValueError(f"need {d + 1} base points and {d + 1} distances")
    a = 2.0 * (b[1:] - b[0])
    extent = max(float(np.max(np.abs(b[1:] - b[0]))), 1e-300)
    sv = np.linalg.svd(a, compute_uv=False)
    if sv[-1] <= 1e-12 * extent:
        raise DegenerateBase("base points do not span the ambient space")
    rhs = np.sum(b[1:] ** 2, axis=1) - np.sum(b[0] ** 2) - r[1:] + r[0]
    x = np.linalg.solve(a, rhs)
    resid = np.sum((x - b) ** 2, axis=1) - r
    scale = max(float(np.max(np.abs(r))), extent ** 2)
    if np.max(np.abs(resid)) > tol * scale:
        raise Inconsistent(f"distances fit no point (residual {np.max(np.abs(resid)):.3g})")
    return x


def align_congruent(a, b) -> AlignmentResult:
    """Least-squares congruence (reflections allowed) taking ``a`` onto ``b``.

    ``b ~= a @ rotation + translation``.
    """
    pa, pb = _as_points(a), _as_points(b)
    if pa.shape != pb.shape:
        raise SizeMismatch(f"cannot align shapes {pa.shape} and {pb.shape}")
    ca, cb = pa.mean(axis=0), pb.mean(axis=0)
    xa, xb = pa - ca, pb - cb
    u, _, vt = np.linalg.svd(xa.T @ xb)
    rot = u @ vt
    resid = xa @ rot - xb
    rmsd = float(np.sqrt(np.mean(np.sum(resid ** 2, axis=1))))
    return AlignmentResult(rot, cb - ca @ rot, rmsd)


def find_similar_subconfigurations(config, probe, tol: float = 1e-8):
    """Every ordered index sequence ``I`` with ``config_I`` similar to ``probe``.

    Returns ``(I, s)`` pairs where ``config_I`` equals ``s * probe`` up to
    congruence. Pairwise distance ratios are compared to relative ``tol``.
    """
    c = _as_points(config)
    q = _as_points(probe)
    if q.shape[0] < 3:
        raise ValueError("probe needs at least three points")
    if c.shape[1] != q.shape[1]:
        raise SizeMismatch("config and probe live in different dimensions")
    dc = distance_matrix(c)
    dq = distance_matrix(q)
    k = q.shape[0]
    if dq[0, 1] == 0:
        raise ValueError("probe has coincident leading points")
    ref = dc.max()
    matches = []

    def extend(seq, s):
        t = len(seq)
        if t == k:
            matches.append((tuple(seq), s))
            return
        target = s * dq[t, :t]
        for u in range(c.shape[0]):
            if u in seq:
                continue
            if np.all(np.abs(dc[u, seq] - target) <= tol * ref):
                extend(seq + [u], s)

    for i, j in itertools.permutations(range(c.shape[0]), 2):
        if dc[i, j] == 0:
            continue
        extend([i, j], dc[i, j] / dq[0, 1])
    return matches
