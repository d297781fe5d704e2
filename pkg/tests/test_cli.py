import json
import subprocess
import sys

import pytest

from slantlab.cli import main, parse_conformal, parse_grid
from slantlab.runner import parse_margin_csv


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_parse_conformal():
    assert parse_conformal(["linear-x1"]) == {"family": "linear", "coordinate": "x1"}
    assert parse_conformal(["product-x1y1", "scale=2"]) == {"family": "product", "first": "x1", "second": "y1", "scale": 2.0}
    assert parse_conformal(["gaussian-x1y1", "center=0.1,-0.2", "width=2"])["center"] == [0.1, -0.2]


def test_parse_grid():
    assert parse_grid("10x10") == (10, 10)
    assert parse_grid("4X3") == (4, 3)


def test_verify_flat_example81(capsys):
    code, out, _ = run(capsys, "verify", "example81", "--k", "1", "--flat", "--grid", "3x3")
    rep = json.loads(out)
    assert code == 0 and rep["passed"]
    assert rep["checks"]["chen_margin"]["worst"] >= 0.0
    assert rep["scenario"]["immersion"]["k"] == 1.0


def test_verify_conformal_example82(capsys):
    code, out, _ = run(capsys, "verify", "example82", "--conformal", "linear-x1", "--grid", "3x3")
    assert code == 0
    assert json.loads(out)["calibration"]["status"] == "calibrated"


def test_verify_wrong_convention_fails(capsys):
    code, _, err = run(capsys, "verify", "example82", "--conformal", "linear-x1", "--lee-sign", "+1", "--lee-scale", "1", "--grid", "2x2")
    assert code == 1
    failed = {f["check"] for f in json.loads(err)["failures"]}
    assert "structure_equation" in failed


def test_wrong_convention_on_flat_ambient_is_harmless(capsys):
    # the Lee form of a constant factor vanishes for every convention
    code, out, _ = run(capsys, "verify", "example82", "--lee-sign", "+1", "--lee-scale", "1", "--grid", "2x2")
    assert code == 0 and json.loads(out)["calibration"]["status"] == "explicit"


def test_verify_csv_format(capsys):
    code, out, _ = run(capsys, "verify", "example81", "--grid", "2x2", "--format", "csv")
    lines = out.splitlines()
    assert code == 0 and lines[0] == "check,status,worst,tolerance,evaluated"
    assert any(line.startswith("chen_margin,pass,") for line in lines)


def test_tolerance_override_fails_check(capsys):
    code, _, err = run(capsys, "verify", "example81", "--conformal", "linear-x1", "--grid", "2x2", "--tol", "chen_margin=-1")
    assert code == 1 and json.loads(err)["failures"][0]["check"] == "chen_margin"


def test_inequality_flat_product(capsys):
    code, out, _ = run(capsys, "inequality", "example81", "--flat", "--grid", "3x3")
    rows = parse_margin_csv(out)
    assert code == 0 and len(rows) == 9
    assert all(r["rhs"] == 0.0 for r in rows)


def test_inequality_conformal_grid(capsys, tmp_path):
    path = tmp_path / "m.csv"
    code, out, _ = run(capsys, "inequality", "example81", "--conformal", "linear-x1", "--grid", "10x10", "-o", str(path))
    assert code == 0 and out == ""
    rows = parse_margin_csv(path.read_text())
    assert len(rows) == 100 and min(r["margin"] for r in rows) >= -1e-9


def test_inequality_json(capsys):
    code, out, _ = run(capsys, "inequality", "example82", "--conformal", "product-x1y1", "--seed", "3", "--count", "5", "--format", "json")
    data = json.loads(out)
    assert code == 0 and len(data["rows"]) == 5 and data["min_margin"] >= -1e-9


def test_calibrate(capsys):
    code, out, _ = run(capsys, "calibrate", "example82", "--flat")
    assert code == 0 and json.loads(out)["status"] == "degenerate"
    code, out, _ = run(capsys, "calibrate", "example82", "--conformal", "product-x1y1")
    rec = json.loads(out)
    assert code == 0 and rec["status"] == "calibrated" and rec["sign"] == -1
    assert abs(rec["scale"] - 0.5) < 1e-12
    code, out, _ = run(capsys, "calibrate", "example81", "--conformal", "linear-x1", "--format", "csv")
    assert out.splitlines()[1].startswith("calibrated,-1,0.5,")


def test_config_file_and_random_reference(capsys, tmp_path):
    path = tmp_path / "run.toml"
    path.write_text('schema_version = 1\nid = "file-run"\n[immersion]\nfamily = "example82"\n[sampling]\nshape = [2, 2]\n')
    code, out, _ = run(capsys, "verify", str(path))
    assert code == 0 and json.loads(out)["scenario_id"] == "file-run"
    code, out, _ = run(capsys, "inequality", "random:7", "--count", "3", "--seed", "1")
    assert code == 0 and len(parse_margin_csv(out)) >= 3


@pytest.mark.parametrize(
    "argv",
    [
        ["verify", "example82", "--k", "2"],
        ["verify", "example81", "--lee-sign", "1"],
        ["verify", "example81", "--tol", "nope=1"],
        ["verify", "example81", "--conformal", "cubic"],
        ["verify", "/nonexistent/file.toml"],
    ],
)
def test_usage_errors_exit_2(capsys, argv):
    code, _, err = run(capsys, *argv)
    assert code == 2 and err.startswith("slantlab: error:")


def test_bad_config_reports_field(capsys, tmp_path):
    path = tmp_path / "bad.toml"
    path.write_text('schema_version = 1\n[immersion]\nfamily = "example81"\nk = 0\n')
    code, _, err = run(capsys, "verify", str(path))
    assert code == 2 and "immersion.k" in err


def test_module_entry_point():
    out = subprocess.run([sys.executable, "-m", "slantlab", "--version"], capture_output=True, text=True, check=True)
    assert out.stdout.startswith("slantlab ")


def test_repeated_runs_are_byte_identical(capsys):
    argv = ["verify", "example82", "--conformal", "product-x1y1", "--seed", "5", "--count", "4"]
    first = run(capsys, *argv)
    second = run(capsys, *argv)
    assert first == second
