"""Exact linear automorphism machinery for L_{2,4}.

Group elements are exact rational matrices stored as an integer numerator
array with one positive common denominator. Two quotients are supported:

* ``"positive_scale"``: A ~ qA for q > 0 (divide by |first nonzero entry|)
* ``"sign_and_scale"``: A ~ qA for q != 0 (divide by the first nonzero entry)

The generators are the 24 vertex relabelings of K_4, the coordinate sign
flips and the single Regge map; closure is a breadth-first product search.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np

from .errors import ClosureGuardExceeded
from .geometry import edge_index, sample_pseudo_generic, edge_lengths
from .variety import on_L

QUOTIENTS = ("positive_scale", "sign_and_scale")
_SAFE = 2 ** 62


def _reduce(num, den):
    """Divide numerators and denominator by their common gcd (object/int arrays)."""
    g = math.gcd(int(den), *(int(x) for x in np.ravel(num)))
    if g > 1:
        num = num // g
        den = den // g
    return num, den


def _compact(num):
    if num.dtype == object and (num.size == 0 or max(abs(int(x)) for x in num.ravel()) < 2 ** 31):
        return num.astype(np.int64)
    return num


@dataclass(frozen=True, eq=False)
class RationalMatrix:
    """Exact rational square matrix ``num / den`` with ``den > 0`` in lowest terms."""

    num: np.ndarray
    den: int = 1

    def __post_init__(self):
        num = np.array(self.num)
        if num.dtype.kind not in "iuO":
            raise TypeError("numerators must be integers; use RationalMatrix.from_entries")
        if num.ndim != 2 or num.shape[0] != num.shape[1]:
            raise ValueError("matrix must be square")
        den = int(self.den)
        if den == 0:
            raise ZeroDivisionError("zero denominator")
        if den < 0:
            num, den = -num, -den
        num, den = _reduce(num.astype(object), den)
        num = _compact(num)
        num.setflags(write=False)
        object.__setattr__(self, "num", num)
        object.__setattr__(self, "den", int(den))

    @classmethod
    def from_entries(cls, rows: Iterable[Iterable]) -> "RationalMatrix":
        fr = [[Fraction(x) for x in row] for row in rows]
        den = math.lcm(*(x.denominator for row in fr for x in row))
        num = np.array([[int(x * den) for x in row] for row in fr], dtype=object)
        return cls(num, den)

    @classmethod
    def identity(cls, size: int = 6) -> "RationalMatrix":
        return cls(np.eye(size, dtype=np.int64), 1)

    @property
    def size(self) -> int:
        return self.num.shape[0]

    def entries(self) -> list[list[Fraction]]:
        return [[Fraction(int(x), self.den) for x in row] for row in self.num]

    def to_float(self) -> np.ndarray:
        return self.num.astype(float) / self.den

    def __matmul__(self, other: "RationalMatrix") -> "RationalMatrix":
        return RationalMatrix(self.num.astype(object) @ other.num.astype(object), self.den * other.den)

    def __mul__(self, q) -> "RationalMatrix":
        q = Fraction(q)
        return RationalMatrix(self.num.astype(object) * q.numerator, self.den * q.denominator)

    __rmul__ = __mul__

    def __eq__(self, other):
        if not isinstance(other, RationalMatrix):
            return NotImplemented
        return self.den == other.den and np.array_equal(self.num, other.num)

    def __hash__(self):
        return hash(self.key())

    def key(self):
        return (tuple(int(x) for x in self.num.ravel()), self.den)

    def det(self) -> Fraction:
        """Exact determinant by fraction-valued Gaussian elimination."""
        a = self.entries()
        n = len(a)
        det = Fraction(1)
        for col in range(n):
            piv = next((r for r in range(col, n) if a[r][col] != 0), None)
            if piv is None:
                return Fraction(0)
            if piv != col:
                a[col], a[piv] = a[piv], a[col]
                det = -det
            det *= a[col][col]
            for r in range(col + 1, n):
                f = a[r][col] / a[col][col]
                if f:
                    a[r] = [x - f * y for x, y in zip(a[r], a[col])]
        return det

    def inverse(self) -> "RationalMatrix":
        a = self.entries()
        n = len(a)
        aug = [row + [Fraction(int(i == j)) for j in range(n)] for i, row in enumerate(a)]
        for col in range(n):
            piv = next((r for r in range(col, n) if aug[r][col] != 0), None)
            if piv is None:
                raise ZeroDivisionError("singular matrix")
            aug[col], aug[piv] = aug[piv], aug[col]
            p = aug[col][col]
            aug[col] = [x / p for x in aug[col]]
            for r in range(n):
                if r != col and aug[r][col] != 0:
                    f = aug[r][col]
                    aug[r] = [x - f * y for x, y in zip(aug[r], aug[col])]
        return RationalMatrix.from_entries([row[n:] for row in aug])

    def canonical(self, quotient: str = "positive_scale") -> "RationalMatrix":
        """Scale-normal form: divide by the (absolute) first nonzero entry."""
        flat = self.num.ravel()
        nz = np.flatnonzero(flat)
        if nz.size == 0:
            raise ValueError("zero matrix has no scale class")
        first = int(flat[nz[0]])
        if quotient == "positive_scale":
            return RationalMatrix(self.num, abs(first))
        if quotient == "sign_and_scale":
            return RationalMatrix(self.num, first)
        raise ValueError(f"quotient must be one of {QUOTIENTS}")

    def is_nonnegative(self) -> bool:
        return bool(np.all(self.num >= 0))

    def to_json(self):
        return [[[int(x), self.den] for x in row] for row in self.num]

    def __repr__(self):
        return f"RationalMatrix({self.entries()})"


@dataclass(frozen=True)
class GroupElement:
    matrix: RationalMatrix
    word: tuple = field(default=(), compare=False)


def vertex_relabeling_matrix(perm: Sequence[int]) -> RationalMatrix:
    """Edge permutation induced by sending vertex ``i`` to ``perm[i]`` (K_4, 6 x 6).

    ``(A l)[perm(i) perm(j)] = l[ij]``.
    """
    perm = [int(p) for p in perm]
    if sorted(perm) != list(range(4)):
        raise ValueError("perm must be a permutation of 0..3")
    a = np.zeros((6, 6), dtype=np.int64)
    for i, j in itertools.combinations(range(4), 2):
        a[edge_index(perm[i], perm[j]), edge_index(i, j)] = 1
    return RationalMatrix(a)


def sign_flip_matrix(signs: Sequence[int]) -> RationalMatrix:
    return RationalMatrix(np.diag(np.array(signs, dtype=np.int64)))


def regge_matrix() -> RationalMatrix:
    """The Regge symmetry of the planar tetrahedron (half-integer, involutive)."""
    e12, e13, e23, e14, e24, e34 = range(6)
    num = np.zeros((6, 6), dtype=np.int64)
    num[e13, e13] = 2
    num[e24, e24] = 2
    for target, negated in ((e12, e12), (e23, e23), (e34, e34), (e14, e14)):
        for src in (e12, e23, e34, e14):
            num[target, src] = -1 if src == negated else 1
    return RationalMatrix(num, 2)


def relabeling_matrices() -> list[RationalMatrix]:
    return [vertex_relabeling_matrix(p) for p in itertools.permutations(range(4))]


def single_flip_matrices(size: int = 6) -> list[RationalMatrix]:
    out = []
    for k in range(size):
        s = [1] * size
        s[k] = -1
        out.append(sign_flip_matrix(s))
    return out


def _canon_batch(num, den, quotient):
    """Vectorized canonical forms for a stack of int64 matrices."""
    m = num.shape[0]
    flat = num.reshape(m, -1)
    lead = np.argmax(flat != 0, axis=1)
    first = flat[np.arange(m), lead]
    if quotient == "positive_scale":
        new_den = np.abs(first)
    else:
        new_den = np.abs(first)
        flat = flat * np.sign(first)[:, None]
    g = np.gcd.reduce(np.abs(flat), axis=1)
    g = np.gcd(g, new_den)
    return (flat // g[:, None]).reshape(num.shape), new_den // g


def close_group(generators: Sequence[RationalMatrix], quotient: str = "positive_scale",
                guard: int = 10 ** 6) -> list[GroupElement]:
    """All products of the generators, modulo the chosen scale quotient.

    Breadth-first from the identity; each frontier layer is multiplied by
    every generator at once. Raises ``ClosureGuardExceeded`` past ``guard``
    elements.
    """
    if quotient not in QUOTIENTS:
        raise ValueError(f"quotient must be one of {QUOTIENTS}")
    gens = [g.canonical(quotient) for g in generators]
    if not gens:
        return [GroupElement(RationalMatrix.identity(6))]
    size = gens[0].size
    if any(g.num.dtype == object for g in gens):
        return _close_group_slow(gens, quotient, guard)
    g_num = np.stack([g.num for g in gens]).astype(np.int64)
    g_den = np.array([g.den for g in gens], dtype=np.int64)
    ident = RationalMatrix.identity(size).canonical(quotient)
    seen = {ident.num.tobytes() + ident.den.to_bytes(8, "little"): (ident.num, ident.den, ())}
    f_num = ident.num[None].astype(np.int64)
    f_den = np.array([ident.den], dtype=np.int64)
    f_words = [()]
    while f_num.shape[0]:
        peak = int(np.abs(f_num).max()) * int(np.abs(g_num).max()) * size
        if peak >= _SAFE or int(f_den.max()) * int(g_den.max()) >= _SAFE:
            return _close_group_slow(gens, quotient, guard)
        nxt_num, nxt_den, nxt_words = [], [], []
        for gi in range(len(gens)):
            prod = np.matmul(g_num[gi][None], f_num)
            pden = f_den * g_den[gi]
            c_num, c_den = _canon_batch(prod, pden, quotient)
            for k in range(c_num.shape[0]):
                key = c_num[k].tobytes() + int(c_den[k]).to_bytes(8, "little")
                if key in seen:
                    continue
                word = (gi,) + f_words[k]
                seen[key] = (c_num[k], int(c_den[k]), word)
                nxt_num.append(c_num[k])
                nxt_den.append(c_den[k])
                nxt_words.append(word)
                if len(seen) > guard:
                    raise ClosureGuardExceeded(f"closure exceeded {guard} elements")
        if not nxt_num:
            break
        f_num = np.stack(nxt_num)
        f_den = np.array(nxt_den, dtype=np.int64)
        f_words = nxt_words
    return [GroupElement(RationalMatrix(num, den), word) for num, den, word in seen.values()]


def _close_group_slow(gens, quotient, guard):
    ident = RationalMatrix.identity(gens[0].size).canonical(quotient)
    seen = {ident.key(): GroupElement(ident)}
    frontier = [seen[ident.key()]]
    while frontier:
        nxt = []
        for el in frontier:
            for gi, g in enumerate(gens):
                prod = (g @ el.matrix).canonical(quotient)
                key = prod.key()
                if key not in seen:
                    seen[key] = GroupElement(prod, (gi,) + el.word)
                    nxt.append(seen[key])
                    if len(seen) > guard:
                        raise ClosureGuardExceeded(f"closure exceeded {guard} elements")
        frontier = nxt
    return list(seen.values())


def filter_nonnegative(group: Iterable[GroupElement]) -> list[GroupElement]:
    return [el for el in group if el.matrix.is_nonnegative()]


def check_canonical_nonneg_compositions(group: Iterable[GroupElement], n_matrix) -> list[GroupElement]:
    """Elements ``A`` for which ``N @ A`` is entrywise non-negative."""
    n_mat = np.asarray(n_matrix).astype(object)
    out = []
    for el in group:
        prod = n_mat @ el.matrix.num.astype(object)
        if all(x >= 0 for x in prod.ravel()):
            out.append(el)
    return out


def verify_preserves_variety(a: RationalMatrix, samples: int = 100, seed: int = 0,
                             tol: float = 1e-7) -> float:
    """Largest ``on_L`` residual of ``A l`` over pseudo-generic planar K_4 lengths."""
    mat = a.to_float() if isinstance(a, RationalMatrix) else np.asarray(a, float)
    worst = 0.0
    for k in range(samples):
        l = edge_lengths(sample_pseudo_generic(4, 2, seed=seed * 100_003 + k))
        _, resid = on_L(mat @ l, 2, tol)
        worst = max(worst, resid)
    return worst


def standard_generators(with_regge: bool = True) -> list[RationalMatrix]:
    gens = relabeling_matrices() + single_flip_matrices()
    if with_regge:
        gens.append(regge_matrix())
    return gens
