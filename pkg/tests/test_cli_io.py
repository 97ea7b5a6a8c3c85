import json
import re

import numpy as np
import pytest

from conftest import best_matches
from unlabeled_rigidity import cli, io
from unlabeled_rigidity.errors import DatasetFormatError
from unlabeled_rigidity.geometry import Configuration


def simulate(tmp_path, *extra):
    out = tmp_path / "data.json"
    rc = cli.main(["simulate", "--points", "6", "--mode", "loop", "--bound", "2", "--seed", "11",
                   "--out", str(out), *extra])
    assert rc == cli.EXIT_OK
    return out, tmp_path / "data.truth.json"


def test_simulate_counts_and_determinism(tmp_path):
    out, side = simulate(tmp_path, "--extra", "2")
    first = out.read_bytes()
    raw = json.loads(first)
    assert len(raw["values"]) == 6 + 3 * (6 - 4) + 2
    assert set(raw) == {"dimension", "bound", "mode", "values", "meta"}
    truth = json.loads(side.read_text())
    assert len(truth["walks"]) == len(raw["values"]) and len(truth["points"]) == 6
    simulate(tmp_path, "--extra", "2")
    assert out.read_bytes() == first


def test_values_written_with_17_digits(tmp_path):
    out, _ = simulate(tmp_path)
    text = out.read_text()
    body = text[text.index('"values"'):]
    nums = re.findall(r"[-0-9.e+]+", body.split("[", 1)[1].split("]", 1)[0])
    assert all(len(n.replace(".", "").replace("-", "").split("e")[0].lstrip("0")) <= 17 for n in nums)
    spec = io.ExperimentSpec(6, 2, "loop", 2, 0, 11)
    dataset, _ = io.simulate(spec)
    assert [float(n) for n in nums] == dataset["values"]


def test_experiment_validation(tmp_path):
    assert cli.main(["simulate", "--points", "6", "--mode", "loop", "--bound", "1",
                     "--out", str(tmp_path / "x.json")]) == cli.EXIT_MISMATCH
    with pytest.raises(ValueError):
        io.ExperimentSpec(3, 2)
    with pytest.raises(ValueError):
        io.ExperimentSpec(6, 2, "path", restricted=True)
    assert io.expected_value_count(io.ExperimentSpec(7, 2, "path", extra=4)) == 6 + 9 + 4
    assert io.expected_value_count(io.ExperimentSpec(7, 2, "edge")) == 21


def test_blind_pipeline(tmp_path):
    out, side = simulate(tmp_path, "--extra", "3")
    truth = Configuration(np.array(json.loads(side.read_text())["points"]))
    side.unlink()
    res_path = tmp_path / "result.json"
    assert cli.main(["reconstruct", str(out), "--out", str(res_path)]) == cli.EXIT_OK
    res = json.loads(res_path.read_text())
    assert res["n"] == 6 and res["scale"] == 1.0
    assert min(r for _, r in best_matches(truth, np.array(res["points"]))) < 1e-7
    assert res["diagnostics"]["unexplained"] == 0


def test_reconstruct_errors(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert cli.main(["reconstruct", str(bad)]) == cli.EXIT_FORMAT
    bad.write_text(json.dumps({"dimension": 2, "values": [1.0]}))
    assert cli.main(["reconstruct", str(bad)]) == cli.EXIT_FORMAT
    bad.write_text(json.dumps({"dimension": 2, "bound": 2, "values": [1.0, -1.0]}))
    assert cli.main(["reconstruct", str(bad)]) == cli.EXIT_FORMAT
    one = tmp_path / "one.json"
    one.write_text(json.dumps({"dimension": 1, "bound": 1, "values": [0.7, 0.4, 1.1]}))
    assert cli.main(["reconstruct", str(one)]) == cli.EXIT_UNSUPPORTED
    junk = tmp_path / "junk.json"
    junk.write_text(json.dumps({"dimension": 2, "bound": 2, "values": list(np.linspace(1, 2, 9) ** 1.5)}))
    assert cli.main(["reconstruct", str(junk)]) == cli.EXIT_NO_BASE
    with pytest.raises(DatasetFormatError):
        io.dataset_from_dict([1, 2])


def test_check_variety_reports():
    rep = cli.cmd_check_variety([3, 4, 5, 5, 4, 3])
    assert rep["on_variety"] and not rep["full_rank"] and rep["relation"] == [1, -2, 1]
    spec = io.ExperimentSpec(4, 2, "path", 2, 0, 3)
    dataset, side = io.simulate(spec)
    l = np.array(side["points"])
    from unlabeled_rigidity.geometry import edge_lengths
    rep = cli.cmd_check_variety(edge_lengths(l))
    assert rep["on_variety"] and rep["full_rank"] and not rep["singular"]
    rng = np.random.default_rng(0)
    rep = cli.cmd_check_variety(rng.uniform(1, 2, 6))
    assert not rep["on_variety"] and rep["residual"] > 1e-4


def _markers(svg, gid):
    block = svg[svg.index(f'id="{gid}"'):]
    return block[:block.index("</g>")].count("<use")


def test_plot(tmp_path):
    out, side = simulate(tmp_path)
    res_path = tmp_path / "r.json"
    assert cli.main(["reconstruct", str(out), "--out", str(res_path)]) == cli.EXIT_OK
    svg = tmp_path / "p.svg"
    assert cli.main(["plot", str(res_path), "--sidecar", str(side), "--out", str(svg)]) == cli.EXIT_OK
    text = svg.read_text()
    assert _markers(text, "reconstruction") == 6 and _markers(text, "ground-truth") == 6
    assert cli.main(["plot", str(res_path), "--out", str(svg)]) == cli.EXIT_OK
    text = svg.read_text()
    assert _markers(text, "reconstruction") == 6 and 'id="ground-truth"' not in text
    other = tmp_path / "other.truth.json"
    other.write_text(json.dumps({"points": [[0, 0], [1, 0], [0, 1]]}))
    assert cli.main(["plot", str(res_path), "--sidecar", str(other), "--out", str(svg)]) == cli.EXIT_MISMATCH


def test_matrix_export_is_exact():
    from unlabeled_rigidity.symmetry import regge_matrix
    m = io.matrix_json(regge_matrix())
    assert m[0][0] == [-1, 2] and m[1][1] == [1, 1] and m[0][1] == [0, 1]
