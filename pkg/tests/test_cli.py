import json
import subprocess
import sys

import jsonschema
import pytest

from ghzteleport import cli
from ghzteleport.config import ConfigError, default_config, dump_config, load_config, parse_pairs


def run(capsys, *argv):
    status = cli.main(list(argv))
    out = capsys.readouterr()
    return status, out.out, out.err


def run_json(capsys, *argv):
    status, out, err = run(capsys, *argv, "--format", "json")
    doc = json.loads(out) if out else None
    if doc is not None:
        jsonschema.validate(doc, cli.OUTPUT_SCHEMA)
    return status, doc, err


# --- configuration ------------------------------------------------------------------


def test_config_file_round_trip(tmp_path):
    path = tmp_path / "run.cfg"
    path.write_text("# comment\ngrid.n_points=128\nresource.mode = finite\nresource.r=2\n\n")
    cfg = load_config(str(path), [("seeds.count", "3")])
    assert cfg["grid.n_points"] == 128 and cfg["resource.mode"] == "finite" and cfg["resource.r"] == 2.0
    assert cfg["seeds.count"] == 3
    again = load_config(None, list(parse_pairs(dump_config(cfg))))
    assert again.as_dict() == cfg.as_dict()


@pytest.mark.parametrize("text", ["grid.bogus=1", "grid.n_points=abc", "no equals sign", "grid.extent=-1"])
def test_config_rejects(tmp_path, text):
    path = tmp_path / "bad.cfg"
    path.write_text(text + "\n")
    with pytest.raises(ConfigError):
        load_config(str(path)).validate()


def test_defaults_valid():
    default_config().validate()


# --- bases-check ---------------------------------------------------------------------


def test_bases_check_default(capsys):
    status, doc, _ = run_json(capsys, "bases-check")
    assert status == 0
    assert {r["family"] for r in doc["records"]} == {"bell", "triple", "pi123"}
    for r in doc["records"]:
        assert r["gram_deviation"] < 1e-10 and r["completeness_deviation"] < 1e-10
    assert doc["summary"]["failures"] == []


def test_bases_check_small_grid(capsys):
    status, doc, _ = run_json(capsys, "bases-check", "--set", "grid.n_points=8", "--set", "grid.extent=4")
    assert status == 0


def test_bases_check_negative_extent(capsys):
    status, out, err = run(capsys, "bases-check", "--set", "grid.extent=-3")
    assert status == 2 and out == ""
    assert json.loads(err)["error"] == "ConfigError"


def test_unknown_key_exits_2(capsys):
    status, _, err = run(capsys, "bases-check", "--set", "grid.bogus=1")
    assert status == 2 and "grid.bogus" in err


def test_threshold_failure_exits_1(capsys, monkeypatch):
    monkeypatch.setattr(cli, "BASIS_TOLERANCE", 0.0)
    status, doc, _ = run_json(capsys, "bases-check", "--set", "grid.n_points=8", "--set", "grid.extent=4")
    assert status == 1
    assert len(doc["summary"]["failures"]) == 3


# --- teleport ------------------------------------------------------------------------


def test_teleport_entangled_ideal(capsys):
    status, doc, _ = run_json(capsys, "teleport-entangled", "--runs", "10")
    assert status == 0
    assert len(doc["records"]) == 10
    assert [r["seed"] for r in doc["records"]] == list(range(10))
    assert all(r["fidelity"] >= 1 - 1e-8 for r in doc["records"])
    assert set(doc["records"][0]["outcome"]) >= {"p", "P", "Q"}


def test_teleport_single_finite(capsys):
    status, doc, _ = run_json(capsys, "teleport-single", "--runs", "200", "--set", "resource.mode=finite",
                              "--set", "resource.r=1", "--set", "input.width=0.5")
    assert status == 0
    assert doc["summary"]["mean_fidelity"] == pytest.approx(0.881, abs=0.01)
    assert doc["summary"]["std_error"] > 0


def test_teleport_triple_basis(capsys):
    status, doc, _ = run_json(capsys, "teleport-entangled", "--basis", "triple", "--runs", "4")
    assert status == 0
    assert doc["summary"]["max_defect_triple"] > 0.1
    assert doc["summary"]["max_defect_pi123"] < 1e-9
    assert {r["basis"] for r in doc["records"]} == {"triple", "pi123"}


def test_teleport_grid_error_exits_2(capsys):
    status, _, err = run(capsys, "teleport-entangled", "--set", "resource.mode=finite", "--set", "resource.r=3")
    assert status == 2
    assert json.loads(err)["error"] == "ResourceError"


def test_csv_header_fixed(capsys):
    status, out, _ = run(capsys, "teleport-single", "--runs", "3", "--format", "csv")
    lines = out.strip().splitlines()
    assert status == 0
    assert lines[0].split(",") == cli.TELEPORT_COLUMNS
    assert len(lines) == 4


def test_output_file(tmp_path, capsys):
    path = tmp_path / "out.json"
    status, out, _ = run(capsys, "teleport-single", "--runs", "2", "--format", "json", "--out", str(path))
    assert status == 0 and out == ""
    jsonschema.validate(json.loads(path.read_text()), cli.OUTPUT_SCHEMA)


@pytest.mark.parametrize("fmt", ["csv", "json"])
def test_byte_identical_reruns(tmp_path, fmt):
    args = ["teleport-entangled", "--runs", "6", "--set", "resource.mode=finite", "--set", "resource.r=1",
            "--set", "grid.n_points=32", "--format", fmt]
    outs = []
    path = tmp_path / f"out.{fmt}"
    for workers in (1, 1, 3):
        assert cli.main(args + ["--set", f"run.workers={workers}", "--out", str(path)]) == 0
        outs.append(path.read_bytes().replace(f"run.workers={workers}".encode(), b""))
    assert outs[0] == outs[1]
    # worker count appears in the echoed config; the records must not depend on it
    recs = [json.loads(o)["records"] if fmt == "json" else o.split(b"\n", 1)[1] for o in outs]
    assert recs[0] == recs[2]


def test_module_entry_point():
    res = subprocess.run([sys.executable, "-m", "ghzteleport", "bases-check", "--set", "grid.n_points=8",
                          "--set", "grid.extent=4", "--format", "csv"], capture_output=True, text=True)
    assert res.returncode == 0
    assert res.stdout.splitlines()[0].split(",") == cli.BASES_COLUMNS


# --- sweep -----------------------------------------------------------------------------


def test_sweep_r_entangled_increasing(capsys):
    status, doc, _ = run_json(capsys, "sweep", "--runs", "50", "--set", "grid.extent=48",
                              "--set", "input.width=2", "--set", "resource.mode=finite")
    assert status == 0
    means = [r["mean_fidelity"] for r in doc["records"]]
    assert [r["value"] for r in doc["records"]] == [0.5, 1.0, 2.0, 3.0]
    assert all(b > a for a, b in zip(means, means[1:]))
    assert doc["summary"]["fidelity_increasing"] is True


def test_sweep_strong_squeezing(capsys):
    status, doc, _ = run_json(capsys, "sweep", "--runs", "2", "--set", "sweep.values=20",
                              "--set", "resource.mode=finite")
    assert status == 0
    row = doc["records"][0]
    assert row["var_x4_minus_x5"] < 1e-12
    assert row["mean_fidelity"] is None


def test_sweep_n_points_convergence(capsys):
    status, doc, _ = run_json(capsys, "sweep", "--runs", "200", "--set", "sweep.parameter=n_points",
                              "--set", "sweep.values=64,128,256", "--set", "sweep.protocol=single",
                              "--set", "resource.mode=finite", "--set", "input.width=0.5")
    assert status == 0
    means = [r["mean_fidelity"] for r in doc["records"]]
    exact = [r["fidelity_exact"] for r in doc["records"]]
    assert abs(means[2] - means[1]) < 1e-3
    assert abs(exact[2] - exact[1]) < 1e-3


def test_sweep_csv_columns(capsys):
    status, out, _ = run(capsys, "sweep", "--runs", "2", "--set", "sweep.values=1", "--set", "resource.mode=finite",
                         "--format", "csv")
    assert status == 0
    assert out.splitlines()[0].split(",") == cli.SWEEP_COLUMNS


def test_sweep_invalid_parameter(capsys):
    status, _, err = run(capsys, "sweep", "--set", "sweep.parameter=width")
    assert status == 2 and "sweep.parameter" in err
