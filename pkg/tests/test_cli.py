import csv
import io
import json

import pytest

from stressflex.cli import main
from stressflex.report import loads


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr().out
    return code, out


def run_json(capsys, *argv):
    code, out = run(capsys, *argv)
    return code, loads(out)


def test_analyze_cube(capsys):
    code, rep = run_json(capsys, "analyze", "--model", "cube")
    assert code == 0
    dims = rep["dimensions"]
    assert (dims["stress"], dims["nontrivial_flex"], dims["trivial_flex"]) == (1, 2, 6)
    assert rep["stress_flex"]["verdict"] == "holds"
    assert rep["izmestiev"]["status"] == "certified"
    assert rep["stability"]["verdict"] == "prestress_stable"
    assert rep["projection"]["verdict"] == "holds"
    assert rep["schema"] == 1


def test_analyze_cuboctahedron(capsys):
    code, rep = run_json(capsys, "analyze", "--model", "cuboctahedron")
    assert code == 0
    assert rep["dimensions"]["stress"] == 4
    assert rep["dimensions"]["nontrivial_flex"] == 1
    names = [p["stress"] for p in rep["stress_flex"]["pairs"]]
    assert sum(n.startswith("basis") for n in names) == 4
    assert "izmestiev" in names


def test_analyze_explicit_apex(capsys):
    code, rep = run_json(capsys, "analyze", "--model", "cube", "--apex", "0.1,0,0")
    assert code == 0
    assert rep["apex"]["point"] == [0.1, 0.0, 0.0]


def test_bad_off_reports_line(capsys, tmp_path):
    path = tmp_path / "bad.off"
    path.write_text("OFF\n4 1 0\n0 0 0\n1 0 0\nnot a number\n0 0 1\n3 0 1 2\n")
    code, rep = run_json(capsys, "analyze", "--off", str(path))
    assert code == 2
    assert rep["error"]["line"] == 5
    assert rep["exit_code"] == 2


def test_missing_off_file(capsys, tmp_path):
    code, rep = run_json(capsys, "analyze", "--off", str(tmp_path / "nope.off"))
    assert code == 2
    assert rep["error"]["type"] == "InputError"


def test_sweep_count_zero(capsys):
    code, rep = run_json(capsys, "sweep", "--random-simple", "--count", "0")
    assert code == 2


def test_two_sources_rejected(capsys):
    code, _ = run(capsys, "analyze", "--model", "cube", "--random-simple")
    assert code == 2


def test_nonpositive_slide_factor(capsys):
    code, _ = run(capsys, "slide", "--model", "cube", "--t", "0")
    assert code == 2


def test_sweep_random_simple(capsys):
    code, rep = run_json(capsys, "sweep", "--random-simple", "--planes", "10",
                         "--count", "20", "--apex", "interior")
    assert code == 0
    assert rep["summary"]["instances"] == 20
    assert rep["summary"]["verdict"] == "holds"


def test_sweep_cube_exterior(capsys):
    code, rep = run_json(capsys, "sweep", "--model", "cube", "--count", "50",
                         "--apex", "exterior-random")
    assert code == 0
    assert rep["summary"]["verdict"] == "holds"
    assert rep["summary"]["errors"] == 0


def test_slide_breaks_residual(capsys):
    code, rep = run_json(capsys, "slide", "--model", "cube", "--seed", "3")
    assert code == 0
    assert rep["dims_preserved"]
    assert rep["residual_before"] <= 1e-8
    assert rep["residual_after"] > 1e-3
    assert rep["verdict_after"] == "fails"


def test_slide_identity(capsys):
    code, rep = run_json(capsys, "slide", "--model", "cube", "--t", "1")
    assert code == 0
    assert rep["residual_before"] == rep["residual_after"]
    assert rep["before"] == rep["after"]


def test_slide_rhombic_dodecahedron(capsys):
    code, rep = run_json(capsys, "slide", "--model", "rhombic_dodecahedron", "--seed", "1")
    assert code == 0
    assert rep["dims_preserved"]


def test_project_cube(capsys):
    code, rep = run_json(capsys, "project", "--model", "cube")
    assert code == 0
    assert rep["projection"]["verdict"] == "holds"
    assert rep["agrees"]


def test_project_tetrahedron(capsys):
    code, rep = run_json(capsys, "project", "--model", "tetrahedron")
    assert code == 0
    assert rep["agrees"]


@pytest.mark.parametrize("argv", [
    ["analyze", "--model", "cube"],
    ["sweep", "--random-simple", "--count", "5", "--apex", "both"],
    ["slide", "--model", "cube", "--seed", "2"],
    ["project", "--random-simple", "--seed", "4"],
])
def test_byte_identical(capsys, argv):
    _, a = run(capsys, *argv)
    _, b = run(capsys, *argv)
    assert a == b


def test_csv_matches_json(capsys):
    argv = ["sweep", "--random-simple", "--count", "4", "--apex", "interior"]
    _, js = run_json(capsys, *argv)
    _, text = run(capsys, *argv, "--format", "csv")
    rows = list(csv.DictReader(io.StringIO(text)))
    assert len(rows) == len(js["rows"])
    for r, j in zip(rows, js["rows"]):
        assert int(r["seed"]) == j["seed"]
        assert float(r["max_relative_residual"]) == j["max_relative_residual"]
        assert r["verdict"] == j["verdict"]


def test_out_writes_file(capsys, tmp_path):
    path = tmp_path / "report.json"
    code, out = run(capsys, "analyze", "--model", "tetrahedron", "--out", str(path))
    assert code == 0 and out == ""
    rep = json.loads(path.read_text())
    assert "--out" not in rep["command_line"]


def test_command_line_reproduces(capsys):
    _, first = run(capsys, "slide", "--model", "cube", "--seed", "5")
    again = loads(first)["command_line"]
    _, second = run(capsys, *again)
    assert first == second


def test_timing_optional(capsys):
    _, rep = run_json(capsys, "analyze", "--model", "cube")
    assert "wall_clock_seconds" not in rep
    _, rep = run_json(capsys, "analyze", "--model", "cube", "--timing")
    assert rep["wall_clock_seconds"] >= 0
