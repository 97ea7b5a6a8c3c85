"""Membership tests for the squared/unsquared measurement varieties at n = d+2.

At the minimal size the variety is a hypersurface cut out by the
determinant of a (d+1) x (d+1) matrix built from squared lengths measured
against the last vertex. The unsquared variety is its preimage under
coordinate squaring, so it is closed under sign flips of any coordinate.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .geometry import edge_index, n_edges

# coordinate order for K_4: 12, 13, 23, 14, 24, 34 (0-based vertices below)
_E = {frozenset(e): edge_index(*e) for e in itertools.combinations(range(4), 2)}


def _e(i, j):
    return _E[frozenset((i, j))]


def _check_size(x, d):
    x = np.asarray(x, dtype=float)
    if x.ndim != 1 or x.size != n_edges(d + 2):
        raise ValueError(f"expected {n_edges(d + 2)} coordinates for d={d}, got shape {x.shape}")
    return x


def gram_from_squared(m, d: int) -> np.ndarray:
    """The (d+1) x (d+1) matrix whose determinant defines M_{d,d+2}.

    ``G_kk = 2 m_{k,last}`` and ``G_kl = m_{k,last} + m_{l,last} - m_{kl}``;
    this is twice the Gram matrix of the configuration with its last point
    at the origin.
    """
    m = _check_size(m, d)
    last = d + 1
    to_last = np.array([m[edge_index(k, last)] for k in range(last)])
    g = to_last[:, None] + to_last[None, :]
    for a in range(last):
        for b in range(a + 1, last):
            g[a, b] -= m[edge_index(a, b)]
            g[b, a] = g[a, b]
    return g


def on_M(m, d: int = 2, tol: float = 1e-7) -> tuple[bool, float]:
    """Membership in M_{d,d+2} with residual ``|det| / mean(|m|)^(d+1)``."""
    m = _check_size(m, d)
    scale = float(np.mean(np.abs(m)))
    if scale == 0.0:
        return True, 0.0
    resid = abs(float(np.linalg.det(gram_from_squared(m, d)))) / scale ** (d + 1)
    return resid <= tol, resid


def on_L(l, d: int = 2, tol: float = 1e-7) -> tuple[bool, float]:
    """Membership in L_{d,d+2}: ``on_M`` of the coordinatewise squares."""
    l = _check_size(l, d)
    return on_M(l * l, d, tol)


@dataclass(frozen=True)
class Subspace:
    normals: np.ndarray
    kind: str

    def basis(self) -> np.ndarray:
        """Orthonormal basis (6 x 3) of the subspace."""
        _, _, vt = np.linalg.svd(self.normals.astype(float))
        return vt[self.normals.shape[0]:].T

    def contains(self, l, tol: float = 1e-9) -> bool:
        return _distance(self._projector(), np.asarray(l, float)) <= tol * max(np.linalg.norm(l), 1e-300)

    def _projector(self):
        a = self.normals.astype(float)
        return a.T @ np.linalg.solve(a @ a.T, a)


def _distance(proj, l):
    return float(np.linalg.norm(proj @ l))


@dataclass(frozen=True)
class SubspaceArrangement:
    subspaces: tuple

    def __len__(self):
        return len(self.subspaces)

    def __iter__(self):
        return iter(self.subspaces)

    def count(self, kind: str) -> int:
        return sum(s.kind == kind for s in self.subspaces)


def _row(*terms):
    r = np.zeros(6, dtype=int)
    for coef, (i, j) in terms:
        r[_e(i, j)] += coef
    return r


def l24_singular_subspaces() -> SubspaceArrangement:
    """The 60 three-dimensional subspaces making up the singular locus of L_{2,4}."""
    subs = []
    # Type I: four collinear points, one subspace per choice of the five signs
    for s13, s23, s14, s24, s34 in itertools.product((1, -1), repeat=5):
        normals = np.array([
            _row((1, (0, 1)), (-s13, (0, 2)), (s23, (1, 2))),
            _row((1, (0, 1)), (-s14, (0, 3)), (s24, (1, 3))),
            _row((s13, (0, 2)), (-s14, (0, 3)), (s34, (2, 3))),
        ])
        subs.append(Subspace(normals, "I"))
    # Type II: one pair of vertices collapsed
    for i, j in itertools.combinations(range(4), 2):
        k, l = [v for v in range(4) if v not in (i, j)]
        for s1, s2 in itertools.product((1, -1), repeat=2):
            normals = np.array([
                _row((1, (i, j))),
                _row((1, (i, k)), (-s1, (j, k))),
                _row((1, (i, l)), (-s2, (j, l))),
            ])
            subs.append(Subspace(normals, "II"))
    # Type III: one triangle collapsed to a point
    for i, j, k in itertools.combinations(range(4), 3):
        normals = np.array([_row((1, (i, j))), _row((1, (i, k))), _row((1, (j, k)))])
        subs.append(Subspace(normals, "III"))
    return SubspaceArrangement(tuple(subs))


_PROJECTORS = None


def _projectors():
    global _PROJECTORS
    if _PROJECTORS is None:
        _PROJECTORS = np.stack([s._projector() for s in l24_singular_subspaces()])
    return _PROJECTORS


def singular_distance_L24(l) -> float:
    """Smallest distance from ``l`` to the singular arrangement, relative to ``|l|``."""
    l = _check_size(l, 2)
    norm = float(np.linalg.norm(l))
    if norm == 0.0:
        return 0.0
    dists = np.linalg.norm(_projectors() @ l, axis=1)
    return float(dists.min()) / norm


def is_singular_L24(l, tol: float = 1e-6) -> bool:
    """True iff ``l`` lies within ``tol * |l|`` of one of the 60 singular subspaces."""
    return singular_distance_L24(l) <= tol


def signflip_det_identity_check(x, y):
    """Both sides of ``sum_S det(S X + Y) = 2^r det(Y)`` over all sign flips ``S``.

    Returns ``(lhs, rhs, discrepancy)`` with the discrepancy taken relative
    to the summed magnitudes of the terms.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape or x.ndim != 2 or x.shape[0] != x.shape[1]:
        raise ValueError("X and Y must be square matrices of equal size")
    r = x.shape[0]
    if r > 10:
        raise ValueError("sign-flip enumeration is limited to r <= 10")
    signs = np.array(list(itertools.product((1.0, -1.0), repeat=r)))
    dets = np.linalg.det(signs[:, :, None] * x[None] + y[None])
    lhs = float(dets.sum())
    rhs = float(2 ** r * np.linalg.det(y))
    scale = max(float(np.abs(dets).sum()), abs(rhs), np.finfo(float).tiny)
    return lhs, rhs, abs(lhs - rhs) / scale
