import json

import pytest

from morsekit import __version__
from morsekit.cli import main
from morsekit.reports import config_hash
from morsekit.spaces import path_graph

PLANE = ["--preset", "planeA", "--trunc", "10", "--pitch", "0.5", "--index-max", "3"]


def read(path):
    return json.loads(path.read_text())


def test_analyze_tree_reports_zero_delta(tmp_path):
    assert main(["analyze", "--preset", "F2", "--radius", "3", "--budget", "50", "--out", str(tmp_path)]) == 0
    rep = read(tmp_path / "analyze.json")
    assert rep["result"]["delta"] == 0.0
    assert rep["version"] == __version__
    assert rep["config_hash"] == config_hash(rep["config"])


def test_analyze_plane_lists_small_geodesics(tmp_path):
    assert main(["analyze", *PLANE, "--budget", "50", "--out", str(tmp_path)]) == 0
    table = read(tmp_path / "analyze.json")["result"]["contraction_table"]
    small = {tuple(sorted(r["pair"])) for r in table if r["contraction"] <= 0.5 + 1e-6}
    assert small == {("r'", "r_0"), ("r''", "r_0"), ("r'", "r''")}
    assert (tmp_path / "contraction.csv").read_text().startswith("p,q,contraction\n")


def test_analyze_is_byte_identical(tmp_path):
    outs = []
    for k in range(3):
        out = tmp_path / str(k)
        assert main(["analyze", "--preset", "Z2", "--radius", "4", "--budget", "80", "--seed", "7",
                     "--out", str(out)]) == 0
        outs.append((out / "analyze.json").read_bytes())
    assert outs[0] == outs[1] == outs[2]


@pytest.mark.parametrize("argv", [
    ["analyze", "missing.json"],
    ["analyze"],
    ["analyze", "--preset", "F2", "--grid", "[[0.5, 1]]"],
    ["analyze", "--preset", "F2", "--grid", "nonsense"],
    ["repro", "exampleC"],
])
def test_validation_errors_exit_2(tmp_path, argv):
    assert main([*argv, "--out", str(tmp_path)]) == 2


def test_bad_json_exit_2(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert main(["analyze", str(bad), "--out", str(tmp_path)]) == 2


def test_argparse_errors_exit_2():
    with pytest.raises(SystemExit) as exc:
        main(["analyze", "--preset", "H3"])
    assert exc.value.code == 2


def test_extend_non_bijection_exit_2(tmp_path):
    labels = ["r_-3", "r_-2", "r_-1", "r_0", "r_1", "r_2", "r_3", "r'", "r''"]
    mp = tmp_path / "map.json"
    mp.write_text(json.dumps({"pairs": [[l, "r_0"] for l in labels]}))
    assert main(["extend", *PLANE, "--map", str(mp), "--out", str(tmp_path)]) == 2


def test_extend_precondition_exit_3(tmp_path):
    sp = tmp_path / "line.json"
    sp.write_text(json.dumps({**path_graph(7), "rays": [[3, 2, 1, 0], [3, 4, 5, 6]]}))
    assert main(["extend", str(sp), "--out", str(tmp_path)]) == 3


def test_extend_identity_report(tmp_path):
    assert main(["extend", *PLANE, "--map-kind", "identity", "--out", str(tmp_path)]) == 0
    rep = read(tmp_path / "extend.json")["result"]
    assert rep["qi"]["K"] == pytest.approx(1.0, abs=0.2)
    assert rep["boundary_agreement"]["passed"]
    assert (tmp_path / "eta.csv").exists()


def test_extend_scrambled_sweep_flags_non_qi(tmp_path):
    argv = ["extend", "--preset", "planeA", "--pitch", "0.5", "--trunc", "5", "--map-kind", "scrambled",
            "--sweep", "5", "10", "20", "--out", str(tmp_path)]
    assert main(argv) == 0
    assert read(tmp_path / "extend.json")["result"]["sweep"]["non_qi_evidence"]


def test_extend_identity_sweep_not_flagged(tmp_path):
    argv = ["extend", "--preset", "planeA", "--pitch", "0.5", "--trunc", "5", "--map-kind", "identity",
            "--sweep", "5", "10", "20", "--out", str(tmp_path)]
    assert main(argv) == 0
    assert not read(tmp_path / "extend.json")["result"]["sweep"]["non_qi_evidence"]
