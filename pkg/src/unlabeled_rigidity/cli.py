"""Command-line driver: simulate, reconstruct, verify-group, check-variety, plot."""

from __future__ import annotations

import argparse
import json
import sys
import time

import numpy as np

from . import io
from .errors import (AmbiguousResult, DatasetFormatError, NoBaseFound, ReconstructionError,
                     UnsupportedDimension)
from .geometry import align_congruent, find_similar_subconfigurations
from .measurement import canonical_matrix
from .rank import integer_relation_search, rational_rank_2d
from .reconstruction import ReconstructionOptions, reconstruct
from .symmetry import (check_canonical_nonneg_compositions, close_group, filter_nonnegative,
                       regge_matrix, standard_generators)
from .variety import is_singular_L24, on_L, singular_distance_L24

EXIT_OK = 0
EXIT_FORMAT = 2
EXIT_NO_BASE = 3
EXIT_AMBIGUOUS = 4
EXIT_UNSUPPORTED = 5
EXIT_MISMATCH = 6


def cmd_simulate(spec: io.ExperimentSpec, out: str, sidecar: str | None = None) -> dict:
    dataset, truth = io.simulate(spec)
    io.write_dataset(out, dataset)
    side = sidecar or _sidecar_path(out)
    io.write_json(side, truth)
    return {"dataset": out, "sidecar": side, "values": len(dataset["values"])}


def _sidecar_path(out):
    return out[:-5] + ".truth.json" if out.endswith(".json") else out + ".truth.json"


def cmd_reconstruct(dataset_path: str, opts: ReconstructionOptions, mode: str | None = None) -> dict:
    data = io.read_dataset(dataset_path)
    return io.result_to_dict(reconstruct(data, mode, opts))


def cmd_verify_group() -> dict:
    t0 = time.perf_counter()
    flips = close_group(standard_generators(with_regge=False), "positive_scale")
    flips_signed = close_group(standard_generators(with_regge=False), "sign_and_scale")
    full = close_group(standard_generators(), "positive_scale")
    full_signed = close_group(standard_generators(), "sign_and_scale")
    nonneg = filter_nonnegative(full)
    base = check_canonical_nonneg_compositions(full, canonical_matrix("base", 2))
    trilat = check_canonical_nonneg_compositions(full, canonical_matrix("trilat", 2))
    return {
        "order_768": len(flips_signed),
        "order_1536_positive_scale": len(flips),
        "order_11520": len(full_signed),
        "order_23040": len(full),
        "nonneg_count": len(nonneg),
        "canonical_checks": {"N1": len(base), "N2": len(trilat)},
        "regge": io.matrix_json(regge_matrix()),
        "nonnegative_elements": [io.matrix_json(el.matrix) for el in nonneg],
        "seconds": round(time.perf_counter() - t0, 3),
    }


def cmd_check_variety(values, d: int = 2, bound: int = 2, mode: str = "path",
                      tol: float = 1e-7) -> dict:
    w = np.asarray(values, dtype=float)
    l = np.linalg.solve(canonical_matrix("base", d).astype(float), w) if mode == "loop" else w
    member, resid = on_L(l, d, tol)
    report = {"on_variety": bool(member), "residual": resid, "lengths": l.tolist()}
    if d == 2:
        sing = is_singular_L24(l)
        rank = rational_rank_2d(w, bound, l24_singular=sing)
        report.update(
            singular=bool(sing),
            singular_distance=singular_distance_L24(l),
            full_rank=rank.certified_full,
            rank_lower_bound=rank.rank_lower_bound,
            relation=list(rank.found_relation) if rank.found_relation else None,
        )
    else:
        rel = integer_relation_search(w[:3], bound * bound)
        report.update(relation=list(rel) if rel else None)
    return report


def cmd_plot(result_path: str, out: str, sidecar: str | None = None) -> dict:
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt
    plt.rcParams["svg.hashsalt"] = "unlabeled-rigidity"

    res = io.read_result(result_path)
    q = np.asarray(res["points"], dtype=float)
    truth = None
    if sidecar:
        truth = np.asarray(io.read_sidecar(sidecar)["points"], dtype=float)
        if truth.shape != q.shape:
            raise ValueError(f"result has {q.shape[0]} points, ground truth has {truth.shape[0]}")
        truth = _matched_truth(q, truth)
    if q.shape[1] != 2:
        q = q[:, :2]
        truth = None if truth is None else truth[:, :2]
    fig, ax = plt.subplots(figsize=(4, 4))
    if truth is not None:
        ax.plot(truth[:, 0], truth[:, 1], "x", color="0.5", ms=9, label="ground truth",
                gid="ground-truth")
    ax.plot(q[:, 0], q[:, 1], "o", mfc="none", color="C0", label="reconstruction",
            gid="reconstruction")
    for i, (x, y) in enumerate(q):
        ax.annotate(str(i), (x, y), textcoords="offset points", xytext=(4, 4), fontsize=7)
    ax.set_aspect("equal")
    ax.legend(fontsize=7)
    fig.savefig(out, format="svg")
    plt.close(fig)
    return {"plot": out, "points": int(q.shape[0]), "ground_truth": truth is not None}


def _matched_truth(q, p):
    """Ground truth reordered to the result's vertices and moved onto it."""
    matches = find_similar_subconfigurations(p, q, tol=1e-6)
    order = list(matches[0][0]) if matches else list(range(q.shape[0]))
    pp = p[order]
    scale = matches[0][1] if matches else 1.0
    al = align_congruent(pp / scale, q)
    return (pp / scale) @ al.rotation + al.translation


def _options(args) -> ReconstructionOptions:
    kw = {"restricted_3d": args.restricted_3d}
    if args.tolerance is not None:
        kw["membership_tol"] = args.tolerance
    return ReconstructionOptions(**kw)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="unlabeled-rigidity",
                                 description="Reconstruct point sets from unlabeled length measurements.")
    sub = ap.add_subparsers(dest="command", required=True)

    s = sub.add_parser("simulate", help="write a shuffled dataset and a ground-truth sidecar")
    s.add_argument("--dimension", type=int, default=2)
    s.add_argument("--points", type=int, required=True)
    s.add_argument("--mode", choices=["path", "loop", "edge"], default="path")
    s.add_argument("--bound", type=int, default=2)
    s.add_argument("--extra", type=int, default=0)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--restricted-3d", action="store_true")
    s.add_argument("--out", required=True)
    s.add_argument("--sidecar", help="ground-truth path (default: <out>.truth.json)")

    r = sub.add_parser("reconstruct", help="reconstruct from a dataset file")
    r.add_argument("dataset")
    r.add_argument("--mode", choices=["path", "loop", "edge"])
    r.add_argument("--tolerance", type=float)
    r.add_argument("--restricted-3d", action="store_true")
    r.add_argument("--out")

    g = sub.add_parser("verify-group", help="exact closure of the length-variety symmetry group")
    g.add_argument("--out")

    c = sub.add_parser("check-variety", help="membership, singularity and rank of a value tuple")
    c.add_argument("values", type=float, nargs="+")
    c.add_argument("--dimension", type=int, default=2)
    c.add_argument("--bound", type=int, default=2)
    c.add_argument("--mode", choices=["path", "loop", "edge"], default="path")
    c.add_argument("--tolerance", type=float, default=1e-7)

    p = sub.add_parser("plot", help="SVG of a reconstruction, optionally against ground truth")
    p.add_argument("result")
    p.add_argument("--sidecar")
    p.add_argument("--out", required=True)
    return ap


def _emit(report, out=None):
    text = json.dumps(report, indent=1, sort_keys=True)
    if out:
        with open(out, "w") as fh:
            fh.write(text + "\n")
    else:
        print(text)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "simulate":
            spec = io.ExperimentSpec(args.points, args.dimension, args.mode, args.bound,
                                     args.extra, args.seed, args.restricted_3d)
            _emit(cmd_simulate(spec, args.out, args.sidecar))
        elif args.command == "reconstruct":
            _emit(cmd_reconstruct(args.dataset, _options(args), args.mode), args.out)
        elif args.command == "verify-group":
            _emit(cmd_verify_group(), args.out)
        elif args.command == "check-variety":
            _emit(cmd_check_variety(args.values, args.dimension, args.bound, args.mode, args.tolerance))
        elif args.command == "plot":
            _emit(cmd_plot(args.result, args.out, args.sidecar))
    except DatasetFormatError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FORMAT
    except NoBaseFound as exc:
        print(f"no base found: {exc}", file=sys.stderr)
        return EXIT_NO_BASE
    except AmbiguousResult as exc:
        print(f"ambiguous: {exc}", file=sys.stderr)
        return EXIT_AMBIGUOUS
    except UnsupportedDimension as exc:
        print(f"unsupported: {exc}", file=sys.stderr)
        return EXIT_UNSUPPORTED
    except (ValueError, ReconstructionError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_MISMATCH
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
