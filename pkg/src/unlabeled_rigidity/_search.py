"""Vectorized proposal generators for base and growth hypotheses.

These only *propose* ordered value tuples. Each proposal is then run
through the formal tuple tests in :mod:`reconstruction`. The generators
solve for the last length of a hypothesis and look it up in the sorted data,
instead of enumerating it, and they quotient out the vertex relabelings
that fix the hypothesis pattern. Neither changes which configurations can
be found.
"""

from __future__ import annotations

import functools
import itertools

import numpy as np

_NEG = -1e300


class ValueIndex:
    """Sorted view of the data values with tolerance lookups."""

    def __init__(self, values, rel_tol):
        self.values = np.asarray(values, dtype=float)
        self.order = np.argsort(self.values, kind="stable")
        self.sorted = self.values[self.order]
        top = float(self.sorted[-1]) if self.sorted.size else 1.0
        self.atol = rel_tol * max(top, 1e-300)

    def __len__(self):
        return self.values.size

    def lookup(self, pred):
        """(lo, hi) sorted-position ranges matching ``pred`` within tolerance."""
        pred = np.where(np.isfinite(pred), pred, _NEG)
        lo = np.searchsorted(self.sorted, pred - self.atol, side="left")
        hi = np.searchsorted(self.sorted, pred + self.atol, side="right")
        return lo, hi

    def tokens(self, positions):
        return [int(self.order[p]) for p in positions]


def _circle(c0, c1, r0, r1):
    """Both intersections of circles around c0, c1 (arrays broadcast over leading dims)."""
    diff = c1 - c0
    dist = np.linalg.norm(diff, axis=-1)
    ex = diff / dist[..., None]
    ey = np.stack([-ex[..., 1], ex[..., 0]], axis=-1)
    x = (r0 ** 2 - r1 ** 2 + dist ** 2) / (2 * dist)
    h2 = r0 ** 2 - x ** 2
    ok = h2 >= -1e-12 * np.maximum(r0 ** 2, 1e-300)
    h = np.sqrt(np.where(ok, np.maximum(h2, 0.0), np.nan))
    base = c0 + x[..., None] * ex
    return np.stack([base + h[..., None] * ey, base - h[..., None] * ey], axis=-2)


def _sphere3(c0, c1, c2, r0, r1, r2):
    """Both intersections of three spheres in R^3."""
    d1 = c1 - c0
    dist = np.linalg.norm(d1, axis=-1)
    ex = d1 / dist[..., None]
    d2 = c2 - c0
    i = np.sum(ex * d2, axis=-1)
    ey = d2 - i[..., None] * ex
    j = np.linalg.norm(ey, axis=-1)
    ey = ey / j[..., None]
    ez = np.cross(ex, ey)
    x = (r0 ** 2 - r1 ** 2 + dist ** 2) / (2 * dist)
    y = (r0 ** 2 - r2 ** 2 + i ** 2 + j ** 2) / (2 * j) - i * x / j
    h2 = r0 ** 2 - x ** 2 - y ** 2
    ok = h2 >= -1e-12 * np.maximum(r0 ** 2, 1e-300)
    h = np.sqrt(np.where(ok, np.maximum(h2, 0.0), np.nan))
    base = c0 + x[..., None] * ex + y[..., None] * ey
    return np.stack([base + h[..., None] * ez, base - h[..., None] * ez], axis=-2)


def _quiet(fn):
    """Degenerate hypotheses produce nan/inf, which the lookups treat as misses."""
    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        with np.errstate(divide="ignore", invalid="ignore"):
            return fn(*args, **kwargs)
    return wrapper


def _ordered_pairs(k):
    i, j = np.meshgrid(np.arange(k), np.arange(k), indexing="ij")
    mask = i != j
    return i[mask], j[mask]


def _chunks(total, per_item, budget=2_000_000):
    step = max(1, budget // max(per_item, 1))
    for start in range(0, total, step):
        yield slice(start, min(total, start + step))


def _emit_hits(lo, hi, build):
    """Call ``build(index_tuple, position)`` for every lookup hit."""
    for idx in zip(*np.nonzero(hi > lo)):
        for pos in range(lo[idx], hi[idx]):
            build(idx, pos)


@_quiet
def base_proposals_path2(vi: ValueIndex):
    """Ordered sorted-position 6-tuples (12, 13, 23, 14, 24, 34) consistent with a planar K_4.

    The triangle on vertices 1..3 is taken with l12 <= l13 <= l23 in sorted
    order, which removes the relabelings of those three vertices.
    """
    v = vi.sorted
    k = v.size
    if k < 6:
        return []
    tri = np.array(list(itertools.combinations(range(k), 3)), dtype=np.int64)
    a, b, c = tri.T
    keep = (v[a] > 0) & (v[a] + v[b] > v[c] * (1 + 1e-12))
    tri = tri[keep]
    pi, pj = _ordered_pairs(k)
    out = []
    for sl in _chunks(len(tri), 2 * pi.size):
        t = tri[sl]
        l12, l13, l23 = (v[t[:, 0]], v[t[:, 1]], v[t[:, 2]])
        x3 = (l12 ** 2 + l13 ** 2 - l23 ** 2) / (2 * l12)
        y3 = np.sqrt(np.maximum(l13 ** 2 - x3 ** 2, 0.0))
        l14 = v[pi][None, :]
        l24 = v[pj][None, :]
        x4 = (l12[:, None] ** 2 + l14 ** 2 - l24 ** 2) / (2 * l12[:, None])
        h2 = l14 ** 2 - x4 ** 2
        h = np.sqrt(np.where(h2 >= -1e-12 * l14 ** 2, np.maximum(h2, 0.0), np.nan))
        pred = np.stack([
            np.hypot(x4 - x3[:, None], h - y3[:, None]),
            np.hypot(x4 - x3[:, None], -h - y3[:, None]),
        ], axis=-1)
        lo, hi = vi.lookup(pred)

        def build(idx, pos, t=t):
            ti, pk, _ = idx
            tup = (int(t[ti, 0]), int(t[ti, 1]), int(t[ti, 2]), int(pi[pk]), int(pj[pk]), int(pos))
            if len(set(tup)) == 6:
                out.append((abs(v[pos] - pred[idx]), tup))

        _emit_hits(lo, hi, build)
    return out


@_quiet
def base_proposals_loop2(vi: ValueIndex):
    """Ordered sorted-position 6-tuples in canonical base row order.

    Rows are ping12, ping13, tri123, ping14, tri124, tri134 with the hub at
    vertex 1; pings are taken in increasing order.
    """
    v = vi.sorted
    k = v.size
    if k < 6:
        return []
    pings = np.array(list(itertools.combinations(range(k), 3)), dtype=np.int64)
    pings = pings[v[pings[:, 0]] > 0]
    px, py = _ordered_pairs(k)
    out = []
    for sl in _chunks(len(pings), 2 * px.size):
        p = pings[sl]
        l12, l13, l14 = (v[p[:, 0]] / 2)[:, None], (v[p[:, 1]] / 2)[:, None], (v[p[:, 2]] / 2)[:, None]
        l23 = v[px][None, :] - l12 - l13
        l24 = v[py][None, :] - l12 - l14
        x3 = (l12 ** 2 + l13 ** 2 - l23 ** 2) / (2 * l12)
        y3 = np.sqrt(np.where((l23 > 0) & (l13 ** 2 >= x3 ** 2), l13 ** 2 - x3 ** 2, np.nan))
        x4 = (l12 ** 2 + l14 ** 2 - l24 ** 2) / (2 * l12)
        h2 = l14 ** 2 - x4 ** 2
        h = np.sqrt(np.where((l24 > 0) & (h2 >= -1e-12 * l14 ** 2), np.maximum(h2, 0.0), np.nan))
        pred = np.stack([
            l13 + l14 + np.hypot(x4 - x3, h - y3),
            l13 + l14 + np.hypot(x4 - x3, -h - y3),
        ], axis=-1)
        lo, hi = vi.lookup(pred)

        def build(idx, pos, p=p):
            ti, pk, _ = idx
            tup = (int(p[ti, 0]), int(p[ti, 1]), int(px[pk]), int(p[ti, 2]), int(py[pk]), int(pos))
            if len(set(tup)) == 6:
                out.append((abs(v[pos] - pred[idx]), tup))

        _emit_hits(lo, hi, build)
    return out


@_quiet
def base_proposals_loop3(vi: ValueIndex):
    """Ordered sorted-position 10-tuples in canonical d=3 base row order.

    Rows: ping12, ping13, tri123, ping14, tri124, tri134, ping15, tri125,
    tri135, tri145 (hub at vertex 1, pings increasing).
    """
    v = vi.sorted
    k = v.size
    if k < 10:
        return []
    out = []
    pairs_a, pairs_b = _ordered_pairs(k)
    for pset in itertools.combinations(range(k), 4):
        if v[pset[0]] <= 0:
            continue
        l12, l13, l14, l15 = (v[list(pset)] / 2)
        used = set(pset)
        l23_all = v - l12 - l13
        xs = np.nonzero((l23_all > abs(l12 - l13)) & (l23_all < l12 + l13))[0]
        xs = [x for x in xs if x not in used]
        if not xs:
            continue
        # point 4 candidates over ordered (t24, t34) token pairs, point 5 over (t25, t35)
        l24 = v[pairs_a] - l12 - l14
        l25 = v[pairs_a] - l12 - l15
        for x in xs:
            l23 = l23_all[x]
            x3 = (l12 ** 2 + l13 ** 2 - l23 ** 2) / (2 * l12)
            y3 = np.sqrt(max(l13 ** 2 - x3 ** 2, 0.0))
            l34 = v[pairs_b] - l13 - l14
            p4, ok4 = _place_third(l12, x3, y3, l14, l24, l34)
            l35 = v[pairs_b] - l13 - l15
            p5, ok5 = _place_third(l12, x3, y3, l15, l25, l35, both=True)
            if not ok4.any() or not ok5.any():
                continue
            i4 = np.nonzero(ok4)[0]
            i5 = np.nonzero(ok5)[0]
            q4 = p4[i4]
            q5 = p5[i5 // 2, i5 % 2] if p5.ndim == 3 else p5[i5]
            dist = np.linalg.norm(q4[:, None, :] - q5[None, :, :], axis=-1)
            pred = l14 + l15 + dist
            lo, hi = vi.lookup(pred)
            for r, c in zip(*np.nonzero(hi > lo)):
                a4 = i4[r]
                a5 = i5[c] // 2
                for pos in range(lo[r, c], hi[r, c]):
                    tup = (pset[0], pset[1], int(x), pset[2], int(pairs_a[a4]), int(pairs_b[a4]),
                           pset[3], int(pairs_a[a5]), int(pairs_b[a5]), int(pos))
                    if len(set(tup)) == 10:
                        out.append((abs(v[pos] - pred[r, c]), tuple(int(t) for t in tup)))
    return out


def _place_third(l12, x3, y3, r1, r2, r3, both=False):
    """Points at distances (r1, r2, r3) from (0,0,0), (l12,0,0), (x3,y3,0)."""
    xq = (l12 ** 2 + r1 ** 2 - r2 ** 2) / (2 * l12)
    yq = (r1 ** 2 - r3 ** 2 + x3 ** 2 + y3 ** 2 - 2 * x3 * xq) / (2 * y3)
    z2 = r1 ** 2 - xq ** 2 - yq ** 2
    ok = (r2 > 0) & (r3 > 0) & (z2 >= -1e-12 * r1 ** 2)
    z = np.sqrt(np.maximum(z2, 0.0))
    top = np.stack([xq, yq, z], axis=-1)
    if not both:
        return top, ok
    bottom = np.stack([xq, yq, -z], axis=-1)
    return np.stack([top, bottom], axis=1), np.repeat(ok, 2)


@_quiet
def growth_proposals(points, vi: ValueIndex, free, mode, d):
    """Proposals ``(anchors, positions)`` for attaching one new point.

    ``anchors`` are candidate vertex indices (hub first in loop mode) and
    ``positions`` the sorted data positions of the d+1 trilateration
    values, in canonical trilateration row order.
    """
    pts = np.asarray(points, dtype=float)
    m = pts.shape[0]
    free = np.asarray(sorted(free), dtype=np.int64)
    if m < d + 1 or free.size < d + 1:
        return []
    v = vi.sorted
    dist = np.linalg.norm(pts[:, None] - pts[None], axis=-1)
    scale = float(dist.max())
    fa, fb = np.meshgrid(free, free, indexing="ij")
    mask = fa != fb
    fa, fb = fa[mask], fb[mask]
    out = []

    def collect(pred, anchor_fn):
        lo, hi = vi.lookup(pred)
        for idx in zip(*np.nonzero(hi > lo)):
            for pos in range(lo[idx], hi[idx]):
                item = anchor_fn(idx, int(pos))
                if item is None:
                    continue
                anchors, positions, point = item
                if len(set(positions)) != len(positions) or not set(positions) <= free_set:
                    continue
                if np.min(np.linalg.norm(pts - point, axis=1)) <= 1e-9 * scale:
                    continue
                out.append((abs(v[pos] - pred[idx]), tuple(anchors), tuple(positions)))

    free_set = set(int(f) for f in free)

    if d == 2:
        if mode == "loop":
            pairs = list(itertools.permutations(range(m), 2))
        else:
            pairs = list(itertools.combinations(range(m), 2))
        for i1, i2 in pairs:
            others = [i for i in range(m) if i not in (i1, i2)]
            if not others:
                continue
            if mode == "loop":
                r1 = v[fa] / 2
                r2 = v[fb] - dist[i1, i2] - r1
            else:
                r1, r2 = v[fa], v[fb]
            valid = (r1 > 0) & (r2 > 0)
            cand = _circle(pts[i1], pts[i2], np.where(valid, r1, np.nan), r2)  # (P, 2, 2)
            oth = pts[others]
            dd = np.linalg.norm(cand[:, :, None, :] - oth[None, None], axis=-1)  # (P, 2, O)
            if mode == "loop":
                pred = dist[i1, others][None, None, :] + r1[:, None, None] + dd
            else:
                pred = dd

            def anchor_fn(idx, pos, i1=i1, i2=i2, others=others, cand=cand):
                p, s, o = idx
                return ((i1, i2, others[o]), (int(fa[p]), int(fb[p]), pos), cand[p, s])

            collect(pred, anchor_fn)
        return out

    if d == 3:
        if mode != "loop":
            raise ValueError("d=3 growth is implemented for loop ensembles")
        trip = np.array([(x, y, z) for x in free for y in free for z in free
                         if x != y and x != z and y != z], dtype=np.int64)
        if not trip.size:
            return out
        for i1 in range(m):
            rest = [i for i in range(m) if i != i1]
            for i2, i3 in itertools.combinations(rest, 2):
                others = [i for i in rest if i not in (i2, i3)]
                if not others:
                    continue
                r1 = v[trip[:, 0]] / 2
                r2 = v[trip[:, 1]] - dist[i1, i2] - r1
                r3 = v[trip[:, 2]] - dist[i1, i3] - r1
                valid = (r2 > 0) & (r3 > 0)
                cand = _sphere3(pts[i1], pts[i2], pts[i3], np.where(valid, r1, np.nan), r2, r3)
                oth = pts[others]
                dd = np.linalg.norm(cand[:, :, None, :] - oth[None, None], axis=-1)
                pred = dist[i1, others][None, None, :] + r1[:, None, None] + dd

                def anchor_fn(idx, pos, i1=i1, i2=i2, i3=i3, others=others, cand=cand):
                    p, s, o = idx
                    t = trip[p]
                    return ((i1, i2, i3, others[o]), (int(t[0]), int(t[1]), int(t[2]), pos), cand[p, s])

                collect(pred, anchor_fn)
        return out
    raise ValueError(f"unsupported dimension {d}")
