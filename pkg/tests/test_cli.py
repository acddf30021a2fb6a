import csv
import io
import json

import pytest

from valgebra.cli import run_command


def put(path, obj):
    path.write_text(json.dumps(obj))
    return str(path)


@pytest.fixture
def cubes(tmp_path):
    pts = [[x, y, z] for x in (0, 1) for y in (0, 1) for z in (0, 1)]
    return [put(tmp_path / f"c{i}.json", pts) for i in range(3)]


def test_mixed_volume_of_cubes(cubes, capsys):
    assert run_command(["mixed-volume", "--bodies", ",".join(cubes)]) == 0
    assert capsys.readouterr().out.strip() == "1"


def test_mixed_volume_out_file_has_meta(cubes, tmp_path, capsys):
    out = tmp_path / "mv.json"
    assert run_command(["mixed-volume", "--bodies", ",".join(cubes), "--arith", "exact", "--out", str(out)]) == 0
    data = json.loads(out.read_text())
    assert data["meta"] == {"reference": "none", "arith": "exact", "conv_mode": "unit"}
    assert data["mixed_volume"] in ("1", 1)


def test_dyndeg_csv(tmp_path, capsys):
    m = put(tmp_path / "g.json", [[3, 0], [0, 2]])
    out = tmp_path / "deg.csv"
    assert run_command(["dyndeg", "--matrix", m, "--codeg", "1", "--kmax", "30", "--out", str(out)]) == 0
    text = out.read_text()
    head, body = text.split("\n", 1)
    assert head.startswith("# reference=") and "arith=float" in head and "conv_mode=unit" in head
    rows = list(csv.DictReader(io.StringIO(body)))
    assert rows[-1]["k"] == "30"
    assert float(rows[-1]["kth_root"]) == pytest.approx(0.5, rel=0.02)
    assert float(rows[-1]["spectral"]) == pytest.approx(0.5)


def test_verify_suite_is_deterministic(tmp_path):
    a, b = tmp_path / "a.txt", tmp_path / "b.txt"
    assert run_command(["verify-suite", "--seed", "7", "--dims", "2", "--out", str(a)]) == 0
    assert run_command(["verify-suite", "--seed", "7", "--dims", "2", "--out", str(b)]) == 0
    assert a.read_bytes() == b.read_bytes()
    assert "conv_mode=unit" in a.read_text() or "unit" in a.read_text()


def test_malformed_json_is_input_error(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert run_command(["mixed-volume", "--bodies", f"{bad},{bad}"]) == 2
    assert "malformed" in capsys.readouterr().err


def test_missing_file_is_input_error(tmp_path):
    assert run_command(["dyndeg", "--matrix", str(tmp_path / "nope.json"), "--codeg", "1"]) == 2


def test_vanishing_on_rotation_is_precondition_error(tmp_path, capsys):
    m = put(tmp_path / "rot.json", [[0, -1], [1, 0]])
    assert run_command(["vanishing", "--matrix", m, "--i", "1"]) == 3
    assert "precondition" in capsys.readouterr().err


def test_minkowski_budget_exhaustion(tmp_path):
    val = put(tmp_path / "psi.json", {"dim": 2, "degree": 1, "terms": [
        {"weight": 1.0, "bodies": [{"dim": 2, "vertices": [[0, 0], [3, 0], [0, 1], [3, 1]]}]}]})
    cfg = put(tmp_path / "cfg.json", {"solver": {"max_iters": 2}})
    out = tmp_path / "sol.json"
    code = run_command(["minkowski", "--valuation", val, "--config", cfg, "--starts", "1", "--fan", "16",
                        "--out", str(out)])
    assert code == 4
    data = json.loads(out.read_text())
    assert data["converged"] is False
    assert data["meta"]["reference"] == "fan-n2-N16" and data["meta"]["arith"] == "float"


def test_minkowski_square_converges(tmp_path):
    val = put(tmp_path / "psi.json", {"dim": 2, "degree": 1, "terms": [
        {"weight": 1.0, "bodies": [{"dim": 2, "vertices": [[0, 0], [1, 0], [0, 1], [1, 1]]}]}]})
    out = tmp_path / "sol.json"
    assert run_command(["minkowski", "--valuation", val, "--starts", "2", "--fan", "16", "--out", str(out)]) == 0
    data = json.loads(out.read_text())
    assert data["c"] == pytest.approx(1, abs=1e-6)
    assert data["min_gap"] >= -1e-6


def test_convolve_json(tmp_path, capsys):
    vol = put(tmp_path / "vol.json", {"dim": 2, "degree": 2, "terms": [{"weight": 1, "bodies": []}]})
    seg = put(tmp_path / "seg.json", {"dim": 2, "degree": 1, "terms": [
        {"weight": 1, "bodies": [{"dim": 2, "vertices": [[0, 0], [1, 0]]}]}]})
    sq = put(tmp_path / "sq.json", [[0, 0], [1, 0], [0, 1], [1, 1]])
    assert run_command(["convolve", "--phi", vol, "--psi", seg, "--eval", sq, "--arith", "exact"]) == 0
    data = json.loads(capsys.readouterr().out)
    assert data["meta"]["arith"] == "exact"
    assert data["valuation"]["degree"] == 1


def test_norms_json(tmp_path, capsys):
    seg = put(tmp_path / "seg.json", {"dim": 2, "degree": 1, "terms": [
        {"weight": 1.0, "bodies": [{"dim": 2, "vertices": [[0, 0], [1, 0]]}]}]})
    assert run_command(["norms", "--valuation", seg, "--budget", "50"]) == 0
    data = json.loads(capsys.readouterr().out)
    assert data["meta"]["reference"].startswith("ball-polygon-n2")
    assert 0 < data["p_norm_lower"] <= data["p_norm_upper"] * (1 + 1e-9)
    assert data["cone_norm"] > 0


def test_invariants_json(tmp_path, capsys):
    m = put(tmp_path / "g.json", [[3, 0], [0, 2]])
    assert run_command(["invariants", "--matrix", m, "--codeg", "1", "--samples", "20"]) == 0
    data = json.loads(capsys.readouterr().out)
    assert data["residual"] <= 1e-8
    assert data["meta"]["conv_mode"] == "unit"


def test_config_fills_unset_flags(cubes, tmp_path, capsys):
    cfg = put(tmp_path / "cfg.json", {"arith": "exact"})
    out = tmp_path / "mv.json"
    assert run_command(["mixed-volume", "--bodies", ",".join(cubes), "--config", cfg, "--out", str(out)]) == 0
    assert json.loads(out.read_text())["meta"]["arith"] == "exact"
    bad = put(tmp_path / "bad.json", {"conv_mode": "weird"})
    assert run_command(["mixed-volume", "--bodies", ",".join(cubes), "--config", bad]) == 2
