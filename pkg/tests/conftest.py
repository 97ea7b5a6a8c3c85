import itertools
import math

import numpy as np
import pytest

from unlabeled_rigidity.geometry import align_congruent, find_similar_subconfigurations
from unlabeled_rigidity.measurement import base_walks, walk_to_functional

ACCEPTANCE = []


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for name, ok, detail in ACCEPTANCE:
        terminalreporter.write_line(f"{name}: {'PASS' if ok else 'FAIL'}  {detail}")


@pytest.fixture
def record():
    def _record(name, ok, detail=""):
        ACCEPTANCE.append((name, bool(ok), detail))
        print(f"{name}: {'PASS' if ok else 'FAIL'}  {detail}")
        return ok
    return _record


def best_matches(truth, result, tol=1e-6):
    """Vertex maps I (result vertex t -> truth vertex I[t]) with unit scale, and their RMSD."""
    q = result.points if hasattr(result, "points") else np.asarray(result)
    p = truth.points if hasattr(truth, "points") else np.asarray(truth)
    out = []
    for idx, s in find_similar_subconfigurations(p, q, tol=tol):
        if abs(s - 1) < tol:
            out.append((idx, align_congruent(q, p[list(idx)]).residual_rmsd))
    return out


def labels_match(result, ensemble, perm, idx):
    n = len(idx)
    for i, f in enumerate(result.functionals):
        if f is None or f.relabeled(idx, n) != ensemble.functionals[perm[i]]:
            return False
    return True


def content(f):
    g = 0
    for c in f.coefficients:
        g = math.gcd(g, int(c))
    return g


_PATTERN = {"path": [1] * 6, "loop": [1, 1, 3, 1, 3, 3]}


def is_veridical(funcs, n, mode, d=2):
    """Do these functionals equal s times the base rows of some vertex labeling?"""
    support = [sum(1 for c in f.coefficients if c) for f in funcs]
    if support != _PATTERN[mode]:
        return False
    scales = {content(f) for f in funcs}
    if len(scales) != 1:
        return False
    s = scales.pop()
    target = [tuple(c // s for c in f.coefficients) for f in funcs]
    for verts in itertools.permutations(range(n), d + 2):
        rows = [walk_to_functional(w, n).coefficients for w in base_walks(d, verts, mode)]
        if rows == target:
            return True
    return False
