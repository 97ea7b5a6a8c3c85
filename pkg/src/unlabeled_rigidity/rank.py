"""Rational-rank testing of measurement tuples.

Values measured by b-bounded integer functionals on a generic configuration
can only satisfy integer relations whose coefficients are bounded by
``b^(k-1)``, so a finite enumeration settles the question. In the plane,
rank 3 on any three coordinates plus non-singularity on L_{2,4} already
certifies rank 6.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import BudgetExceeded, ContractError

MAX_CANDIDATES = 10 ** 8
_CHUNK = 200_000
_CACHED_LIMIT = 1_000_000


@dataclass(frozen=True)
class RationalRankReport:
    rank_lower_bound: int
    certified_full: bool
    found_relation: tuple | None = None
    search_budget_used: int = 0
    reason: str = ""


def _level_vectors(k, t):
    """Integer vectors with max-norm exactly ``t`` and positive leading entry, lex order."""
    vals = np.arange(-t, t + 1)
    prefix_len = 0
    while (2 * t + 1) ** (k - prefix_len) > _CHUNK and prefix_len < k - 1:
        prefix_len += 1
    tail_len = k - prefix_len
    tail = np.array(list(itertools.product(vals, repeat=tail_len)), dtype=np.int64).reshape(-1, tail_len)
    for prefix in itertools.product(vals, repeat=prefix_len):
        nz = [p for p in prefix if p]
        if nz and nz[0] < 0:
            continue
        block = np.hstack([np.broadcast_to(np.array(prefix, dtype=np.int64), (tail.shape[0], prefix_len)), tail])
        if not nz:
            lead = np.argmax(block != 0, axis=1)
            first = block[np.arange(block.shape[0]), lead]
            block = block[first > 0]
        block = block[np.abs(block).max(axis=1) == t]
        if block.size:
            yield block


@lru_cache(maxsize=16)
def _ordered_candidates(k, bound):
    blocks = [blk for t in range(1, bound + 1) for blk in _level_vectors(k, t)]
    arr = np.vstack(blocks)
    arr.setflags(write=False)
    return arr, np.linalg.norm(arr, axis=1)


def integer_relation_search(w, coeff_bound: int, tol: float = 1e-9):
    """Smallest (max-norm, then lexicographic) integer relation on ``w``.

    Returns a tuple ``c`` with ``|c_i| <= coeff_bound``, ``c != 0`` and
    ``|sum c_i w_i| <= tol * |w| * |c|``, or None when no such vector exists.
    Relations are reported with a positive leading nonzero entry.
    """
    c, _ = _search(np.asarray(w, dtype=float), coeff_bound, tol)
    return c


def _search(w, coeff_bound, tol):
    k = w.size
    if k < 2:
        raise ValueError("need at least two values")
    if coeff_bound < 1:
        raise ValueError("coefficient bound must be >= 1")
    total = (2 * coeff_bound + 1) ** k
    if total > MAX_CANDIDATES:
        raise BudgetExceeded(f"{total} candidate relations exceed the guard of {MAX_CANDIDATES}")
    wnorm = float(np.linalg.norm(w))
    if total <= _CACHED_LIMIT:
        cands, norms = _ordered_candidates(k, coeff_bound)
        ok = np.abs(cands @ w) <= tol * wnorm * norms
        if ok.any():
            hit = int(np.argmax(ok))
            return tuple(int(x) for x in cands[hit]), hit + 1
        return None, cands.shape[0]
    used = 0
    for t in range(1, coeff_bound + 1):
        for block in _level_vectors(k, t):
            used += block.shape[0]
            resid = np.abs(block @ w)
            ok = resid <= tol * wnorm * np.linalg.norm(block, axis=1)
            if ok.any():
                return tuple(int(x) for x in block[np.argmax(ok)]), used
    return None, used


def rational_rank_2d(w, b: int, tol: float = 1e-9, l24_singular: bool = False, *,
                     known_independent: bool = False) -> RationalRankReport:
    """Certify rational rank 6 of a planar measurement 6-tuple.

    Looks for an integer relation among the first three values with
    coefficients bounded by ``b**2``. ``known_independent`` skips the search
    when the first three functionals are already known to be independent
    (re-measured edges of a placed triangle).
    """
    w = np.asarray(w, dtype=float)
    if w.size != 6:
        raise ValueError("rational_rank_2d expects 6 values")
    relation, used = (None, 0)
    if not known_independent:
        relation, used = _search(w[:3], b * b, tol)
    if relation is not None:
        return RationalRankReport(1 if np.any(w) else 0, False, relation, used, "relation")
    if l24_singular:
        return RationalRankReport(3, False, None, used, "singular")
    return RationalRankReport(6, True, None, used, "")


def rank_bypass_restricted_3d(w, assume_restricted: bool = False, tol: float = 1e-9) -> RationalRankReport:
    """Rank certificate under the pings-and-triangles-through-one-hub assumption.

    Under that assumption, 10 pairwise distinct values already have rational
    rank 10.
    """
    if not assume_restricted:
        raise ContractError("the d=3 bypass needs the restricted-ensemble assumption")
    w = np.asarray(w, dtype=float)
    if w.size != 10:
        raise ValueError("rank_bypass_restricted_3d expects 10 values")
    s = np.sort(w)
    gaps = np.diff(s)
    distinct = bool(np.all(gaps > tol * max(float(np.abs(s).max()), 1e-300)))
    if distinct:
        return RationalRankReport(10, True)
    return RationalRankReport(1 if np.any(w) else 0, False, None, 0, "repeated value")
