"""JSON formats: unlabeled datasets, ground-truth sidecars and results.

A dataset file never carries labels. Values are written in shuffled order
with 17 significant digits; the matching walks and configuration go to a
separate sidecar file so reconstruction can be run blind.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import __name__ as _pkg
from .errors import DatasetFormatError
from .geometry import Configuration, edge_lengths, edge_list, n_edges, sample_pseudo_generic
from .measurement import (MODES, UnlabeledDataSet, build_trilateration_ensemble, evaluate_labeled,
                          shuffle_order)

GENERATOR = f"{_pkg} 0.1.0"


@dataclass(frozen=True)
class ExperimentSpec:
    n: int
    d: int
    mode: str = "path"
    b: int = 2
    extra: int = 0
    seed: int = 0
    restricted: bool = False

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}")
        if self.d < 1:
            raise ValueError("dimension must be >= 1")
        if self.n < self.d + 2:
            raise ValueError(f"need at least d+2 = {self.d + 2} points")
        if self.b < 1 or self.extra < 0:
            raise ValueError("bound must be >= 1 and extra >= 0")
        if self.mode == "loop" and self.b < 2:
            raise ValueError("loop ensembles need bound >= 2: a ping traverses its edge twice")
        if self.restricted and (self.mode != "loop" or self.d != 3):
            raise ValueError("the restricted ensemble is a d=3 loop ensemble")
        if self.mode == "edge" and self.extra:
            raise ValueError("edge mode measures exactly the N edges; extra walks are not allowed")


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def _dump(obj, float_keys=("values",)) -> str:
    """JSON with 17-significant-digit floats under ``float_keys`` (top level)."""
    body = {k: v for k, v in obj.items() if k not in float_keys}
    text = json.dumps(body, indent=1, sort_keys=True)
    extra = [f' "{k}": [{", ".join(_fmt(v) for v in obj[k])}]' for k in float_keys if k in obj]
    if not extra:
        return text + "\n"
    head = text.rstrip()[:-1].rstrip()
    sep = ",\n" if body else "\n"
    return head + sep + ",\n".join(extra) + "\n}\n"


def simulate(spec: ExperimentSpec):
    """(dataset dict, sidecar dict) for an experiment; deterministic under ``spec.seed``."""
    p = sample_pseudo_generic(spec.n, spec.d, spec.seed)
    if spec.mode == "edge":
        labeled = edge_lengths(p)
        walks = [[i, j] for i, j in edge_list(spec.n)]
        bound = 1
    else:
        ens = build_trilateration_ensemble(spec.n, spec.d, spec.mode, spec.extra, spec.b, spec.seed,
                                           restricted=spec.restricted)
        labeled = evaluate_labeled(ens, p)
        walks = [list(w.vertices) for w in ens.walks]
        bound = spec.b
    perm = shuffle_order(labeled.size, spec.seed)
    dataset = {
        "dimension": spec.d,
        "bound": bound,
        "mode": spec.mode,
        "values": [float(v) for v in labeled[perm]],
        "meta": {"seed": spec.seed, "generator": GENERATOR},
    }
    sidecar = {
        "n": spec.n,
        "dimension": spec.d,
        "mode": spec.mode,
        "bound": bound,
        "seed": spec.seed,
        "extra": spec.extra,
        "restricted": spec.restricted,
        "points": p.points.tolist(),
        "walks": [walks[int(k)] for k in perm],
    }
    return dataset, sidecar


def write_dataset(path, dataset: dict) -> None:
    Path(path).write_text(_dump(dataset))


def write_json(path, obj) -> None:
    Path(path).write_text(json.dumps(obj, indent=1, sort_keys=True) + "\n")


def read_dataset(path) -> UnlabeledDataSet:
    try:
        raw = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise DatasetFormatError(f"cannot read dataset {path}: {exc}") from exc
    return dataset_from_dict(raw)


def dataset_from_dict(raw) -> UnlabeledDataSet:
    if not isinstance(raw, dict):
        raise DatasetFormatError("dataset must be a JSON object")
    missing = [k for k in ("dimension", "bound", "values") if k not in raw]
    if missing:
        raise DatasetFormatError(f"dataset is missing {missing}")
    vals = raw["values"]
    if not isinstance(vals, list) or not all(isinstance(v, (int, float)) and not isinstance(v, bool)
                                             for v in vals):
        raise DatasetFormatError("values must be a list of numbers")
    for key in ("dimension", "bound"):
        if not isinstance(raw[key], int) or isinstance(raw[key], bool):
            raise DatasetFormatError(f"{key} must be an integer")
    try:
        return UnlabeledDataSet(tuple(vals), raw["dimension"], raw["bound"], raw.get("mode", "path"))
    except ValueError as exc:
        raise DatasetFormatError(str(exc)) from exc


def result_to_dict(result) -> dict:
    return {
        "n": result.n,
        "dimension": result.configuration.dimension,
        "mode": result.mode,
        "scale": result.scale,
        "points": result.configuration.points.tolist(),
        "functionals": [None if f is None else [int(c) if isinstance(c, int) else [c.numerator, c.denominator]
                                                for c in f.coefficients]
                        for f in result.functionals],
        "diagnostics": result.diagnostics,
    }


def read_result(path) -> dict:
    try:
        raw = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise DatasetFormatError(f"cannot read result {path}: {exc}") from exc
    if not isinstance(raw, dict) or "points" not in raw or "n" not in raw:
        raise DatasetFormatError("result must contain n and points")
    pts = np.asarray(raw["points"], dtype=float)
    if pts.ndim != 2 or pts.shape[0] != raw["n"]:
        raise DatasetFormatError("result points do not match n")
    return raw


def read_sidecar(path) -> dict:
    try:
        raw = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise DatasetFormatError(f"cannot read sidecar {path}: {exc}") from exc
    if "points" not in raw:
        raise DatasetFormatError("sidecar must contain points")
    return raw


def rational_json(x) -> list:
    """A rational as an explicit ``[numerator, denominator]`` pair."""
    f = Fraction(x)
    return [f.numerator, f.denominator]


def matrix_json(m) -> list:
    """Exact matrix export with every entry as ``[numerator, denominator]``."""
    return [[rational_json(Fraction(int(x), m.den)) for x in row] for row in m.num]


def sidecar_configuration(sidecar: dict) -> Configuration:
    return Configuration(np.asarray(sidecar["points"], dtype=float))


def expected_value_count(spec: ExperimentSpec) -> int:
    if spec.mode == "edge":
        return n_edges(spec.n)
    return n_edges(spec.d + 2) + (spec.d + 1) * (spec.n - spec.d - 2) + spec.extra
