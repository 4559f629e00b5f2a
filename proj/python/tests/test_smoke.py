import json
import xml.etree.ElementTree as ET

import pytest

import dan_mtsp


def test_generate_and_round_trip():
    inst = dan_mtsp.generate_instance(12, 3, seed=4)
    assert inst.n == 12 and inst.m == 3
    assert all(0.0 <= x <= 1.0 and 0.0 <= y <= 1.0 for x, y in inst.coords)
    back = dan_mtsp.Instance.from_json(inst.to_json())
    assert back.coords == inst.coords
    assert json.loads(inst.to_json())["m"] == 3


@pytest.mark.parametrize("solver", ["random", "nn", "nn2opt"])
def test_heuristics_give_valid_solutions(solver):
    inst = dan_mtsp.generate_instance(20, 4, seed=1)
    sol = dan_mtsp.solve(inst, solver)
    assert dan_mtsp.validate(inst, sol["tours"]) == []
    assert len(sol["tours"]) == 4
    assert sol["minmax"] == pytest.approx(max(sol["lengths"]))
    assert sum(len(t) for t in sol["tours"]) == 20 + 2 * 4 - 1


def test_validate_reports_problems():
    inst = dan_mtsp.generate_instance(5, 2, seed=2)
    msgs = dan_mtsp.validate(inst, [[0, 1, 2, 0], [0, 3, 0]])
    assert msgs


def test_brute_force_is_a_lower_bound():
    inst = dan_mtsp.generate_instance(6, 2, seed=3)
    opt = dan_mtsp.brute_force(inst)["minmax"]
    for solver in ("nn", "nn2opt", "random"):
        assert dan_mtsp.solve(inst, solver)["minmax"] >= opt - 1e-9


def test_model_solvers(tmp_path):
    inst = dan_mtsp.generate_instance(10, 2, seed=5)
    model = dan_mtsp.Model.random(d=8, seed=1)
    greedy = dan_mtsp.solve(inst, "dan-greedy", model=model)
    sampled = dan_mtsp.solve(inst, "dan-sample", model=model, samples=8, seed=3)
    assert dan_mtsp.validate(inst, greedy["tours"]) == []
    assert sampled["minmax"] == min(sampled["sample_costs"])

    path = str(tmp_path / "model.bin")
    model.save(path)
    again = dan_mtsp.solve(inst, "dan-greedy", model=dan_mtsp.Model.load(path))
    assert again["tours"] == greedy["tours"]

    with pytest.raises(dan_mtsp.InvalidArgument):
        dan_mtsp.solve(inst, "dan-greedy")


def test_svg_parses():
    inst = dan_mtsp.generate_instance(15, 3, seed=6)
    sol = dan_mtsp.solve(inst, "nn2opt")
    svg = dan_mtsp.render_svg(inst, sol["tours"])
    root = ET.fromstring(svg)
    assert root.tag.endswith("svg")
    polylines = [e for e in root.iter() if e.tag.endswith("polyline")]
    assert len(polylines) == 3
    for line, tour in zip(polylines, sol["tours"]):
        assert len(line.get("points").split()) == len(tour)


def test_cli_in_process(tmp_path):
    code, out, err = dan_mtsp.run_cli(["generate", "--n", "8", "--m", "2", "--count", "2", "--out", str(tmp_path)])
    assert code == 0, err
    manifest = json.loads((tmp_path / "manifest.json").read_text())
    assert len(manifest["instances"]) == 2
    code, out, err = dan_mtsp.run_cli(["solve", "--instance", "missing.json"])
    assert code != 0 and err
