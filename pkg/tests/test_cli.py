import json
import subprocess
import sys

import pytest

from lfmaxwell.cli import eval_fraction, main


def test_coeffs_text(capsys):
    assert main(["coeffs", "--R", "8"]) == 0
    out = capsys.readouterr().out
    assert "-17/20160" in out and out.rstrip().endswith("series == composition: OK")


def test_coeffs_json(capsys):
    assert main(["coeffs", "--R", "6", "--format", "json"]) == 0
    table = json.loads(capsys.readouterr().out)
    assert table["routes_agree"] and len(table["rows"]) == 3


@pytest.mark.parametrize("R", ["5", "7", "0", "34", "six"])
def test_bad_R_is_usage_error(R):
    with pytest.raises(SystemExit) as exc:
        main(["coeffs", "--R", R])
    assert exc.value.code == 2


def test_dt_and_steps_exclusive():
    with pytest.raises(SystemExit) as exc:
        main(["solve", "--dt", "0.1", "--steps", "10"])
    assert exc.value.code == 2


def test_fraction_parsing():
    assert eval_fraction("1/8") == 0.125 and eval_fraction(" 0.5 ") == 0.5


def test_solve_writes_outputs(tmp_path, capsys):
    out = tmp_path / "run"
    code = main(["solve", "--example", "2", "--R", "4", "--order", "1", "--n", "3", "--dt", "1/8",
                 "--out", str(out), "--dump-fields", "4"])
    assert code == 0
    assert {"energy.csv", "errors.json", "fields_000004.vtk", "fields_000008.vtk"} <= {p.name for p in out.iterdir()}
    rec = json.loads((out / "errors.json").read_text())
    assert rec["status"] == "ok" and rec["config"]["example"] == "example2"
    assert "err_E=" in capsys.readouterr().out


def test_solve_bad_dt_exit2(tmp_path, capsys):
    assert main(["solve", "--dt", "0.3", "--out", str(tmp_path)]) == 2
    assert "error" in capsys.readouterr().err


def test_capacity_exit2(tmp_path):
    assert main(["solve", "--order", "2", "--n", "40", "--dt", "0.5", "--out", str(tmp_path)]) == 2


def test_config_file_precedence(tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"R": 2, "n": 2, "dt": 0.25, "example": "1"}))
    out = tmp_path / "o"
    assert main(["solve", "--config", str(cfg), "--R", "4", "--out", str(out)]) == 0
    rec = json.loads((out / "errors.json").read_text())["config"]
    assert rec["R"] == 4 and rec["n"] == 2 and rec["dt"] == 0.25


def test_config_unknown_key(tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"bogus": 1}))
    assert main(["solve", "--config", str(cfg), "--out", str(tmp_path)]) == 2


def test_convergence_needs_three_points(tmp_path):
    assert main(["convergence", "--mode", "spatial", "--ns", "2,4", "--dt", "0.25", "--out", str(tmp_path)]) == 2


def test_convergence_spatial(tmp_path):
    code = main(["convergence", "--mode", "spatial", "--ns", "2,4,8", "--R", "4", "--dt", "1/16",
                 "--out", str(tmp_path)])
    assert code == 0
    lines = (tmp_path / "convergence.csv").read_text().splitlines()
    assert lines[0].startswith("# config:") and lines[1].startswith("mode,R,order,n,dt")
    assert len(lines) == 5
    s = json.loads((tmp_path / "slopes.json").read_text())
    assert s["mode"] == "spatial" and s["points"] == 3
    assert 0.7 < s["field_slopes"]["E"] < 1.3


def test_convergence_temporal(tmp_path):
    code = main(["convergence", "--mode", "temporal", "--dts", "1/4,1/8,1/16", "--R", "2", "--n", "2",
                 "--out", str(tmp_path)])
    assert code == 0
    s = json.loads((tmp_path / "slopes.json").read_text())
    assert s["config"]["reference_dt"] == pytest.approx(1 / 16 / 32)


def test_mesh_info(capsys):
    assert main(["mesh-info", "--n", "4", "--format", "json"]) == 0
    stats = json.loads(capsys.readouterr().out)
    assert stats["triangles"] == 32 and stats["euler_characteristic"] == 1
    assert main(["mesh-info", "--mesh", "/nonexistent/stem"]) == 2


def test_byte_identical_runs(tmp_path):
    args = ["solve", "--example", "1", "--R", "6", "--n", "3", "--dt", "1/8"]
    for name in ("a", "b"):
        assert main(args + ["--out", str(tmp_path / name)]) == 0
    a = (tmp_path / "a" / "energy.csv").read_text().splitlines()[1:]
    b = (tmp_path / "b" / "energy.csv").read_text().splitlines()[1:]
    assert a == b


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "lfmaxwell.cli", "coeffs", "--R", "2"],
                          capture_output=True, text=True, check=False)
    assert proc.returncode == 0 and proc.stdout.startswith("LF_2") and "composition: OK" in proc.stdout
