import csv
import json
import math
import os
import subprocess
import sys

import numpy as np
import pytest

from geoflow import cli
from geoflow.cli import EXIT_NUMERIC, EXIT_OK, EXIT_USAGE, EXIT_VERIFY, main


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def read_rows(path):
    with open(path) as fh:
        return list(csv.reader(fh))


@pytest.fixture(autouse=True)
def _no_env_out(monkeypatch):
    monkeypatch.delenv("GEOFLOW_OUT", raising=False)


def test_simulate_row_count(capsys, tmp_path):
    code, out, _ = run(capsys, "simulate", "--model", "nil", "--p", "1,0,1", "--T", "10", "--h", "0.001",
                       "--out", str(tmp_path))
    assert code == EXIT_OK
    rows = read_rows(tmp_path / "simulate.csv")
    assert rows[0] == ["t", "x", "y", "z", "pA", "pB", "pG"]
    assert len(rows) - 1 == 10000 // 10 + 1
    meta = json.loads((tmp_path / "simulate.json").read_text())
    assert meta["rows"] == 1001 and meta["stride"] == 10 and json.loads(out) == meta


def test_simulate_e3_final_row(capsys, tmp_path):
    code, _, _ = run(capsys, "simulate", "--model", "e3", "--p", "1,0,0", "--T", "1", "--out", str(tmp_path))
    assert code == EXIT_OK
    last = [float(v) for v in read_rows(tmp_path / "simulate.csv")[-1]]
    assert last[0] == pytest.approx(1.0)
    assert np.allclose(last[1:4], [1, 0, 0], atol=1e-12)


def test_invalid_model_is_usage_error(capsys, tmp_path):
    code, _, err = run(capsys, "simulate", "--model", "hyperbolic", "--out", str(tmp_path))
    assert code == EXIT_USAGE and "model" in err
    code, _, err = run(capsys, "simulate", "--bogus")
    assert code == EXIT_USAGE and "usage:" in err
    code, _, _ = run(capsys)
    assert code == EXIT_USAGE
    for bad in (("--T", "-1"), ("--h", "0"), ("--stride", "0"), ("--p", "1,2")):
        assert run(capsys, "simulate", *bad, "--out", str(tmp_path))[0] == EXIT_USAGE


def test_simulate_integration_error_exit_2(capsys, tmp_path):
    code, _, err = run(capsys, "simulate", "--model", "sol", "--p", "3,5,-4", "--T", "1000", "--h", "50",
                       "--stride", "1", "--out", str(tmp_path))
    assert code == EXIT_NUMERIC and "numerical failure" in err
    assert not (tmp_path / "simulate.csv").exists()


def test_verify_nil_defaults(capsys, tmp_path):
    code, out, _ = run(capsys, "verify", "--out", str(tmp_path))
    assert code == EXIT_OK and json.loads(out)["pass"]
    report = json.loads((tmp_path / "verify.json").read_text())
    drift = report["runs"][0]["drift"]
    assert set(drift) == {"g", "p_gamma", "zeta_x", "zeta_y"}
    assert all(v["maxDrift"] <= 1e-6 for v in drift.values())


def test_verify_sol_regular(capsys, tmp_path):
    code, _, _ = run(capsys, "verify", "--model", "sol", "--p=0,1,-1", "--out", str(tmp_path))
    assert code == EXIT_OK


def test_verify_singular_nil(capsys, tmp_path):
    code, _, err = run(capsys, "verify", "--model", "nil", "--p", "1,0,0", "--out", str(tmp_path))
    assert code == EXIT_USAGE and "regular" in err


def test_verify_failure_exit_3_writes_report(capsys, tmp_path, monkeypatch):
    monkeypatch.setattr(cli, "TOL_H", -1.0)
    code, out, _ = run(capsys, "verify", "--model", "e3", "--T", "1", "--out", str(tmp_path))
    assert code == EXIT_VERIFY
    report = json.loads((tmp_path / "verify.json").read_text())
    assert report["pass"] is False and "H (midpoint)" in json.loads(out)["failed"][0]


def test_verify_random_jobs_deterministic(tmp_path, capsys):
    a, b = tmp_path / "a", tmp_path / "b"
    args = ["verify", "--model", "e3", "--T", "5", "--random", "3", "--seed", "7"]
    assert run(capsys, *args, "--out", str(a))[0] == EXIT_OK
    assert run(capsys, *args, "--jobs", "2", "--out", str(b))[0] == EXIT_OK
    ra = json.loads((a / "verify.json").read_text())
    rb = json.loads((b / "verify.json").read_text())
    assert len(ra["runs"]) == 4 and ra["runs"] == rb["runs"]


def test_lattice_commands(capsys):
    code, out, _ = run(capsys, "lattice", "--model", "sol", "--d", "2")
    d = json.loads(out)
    assert code == EXIT_OK and d["sol"]["monodromy"] == [[3, 4], [2, 3]]
    assert d["sol"]["stretch"] == pytest.approx(1.76275, abs=1e-5)
    assert {"unit", "monodromy", "stretch"} <= set(d["sol"])
    code, out, _ = run(capsys, "lattice", "--model", "nil")
    gens = json.loads(out)["generators"]
    assert code == EXIT_OK and gens == [[1, 0, 0], [0, 2, 0], [0, 0, 1]]
    assert run(capsys, "lattice", "--model", "sol", "--d", "4")[0] == EXIT_USAGE
    assert run(capsys, "lattice", "--model", "nil", "--d", "2")[0] == EXIT_USAGE


def test_pell(capsys):
    code, out, _ = run(capsys, "pell", "--d", "94")
    d = json.loads(out)
    assert code == EXIT_OK and (d["unit"]["a"], d["unit"]["b"]) == (2143295, 221064)
    assert run(capsys, "pell", "--d", "94", "--bound", "1000")[0] == EXIT_NUMERIC
    assert run(capsys, "pell", "--d", "9")[0] == EXIT_USAGE


def test_section_and_rotation(capsys, tmp_path):
    code, out, _ = run(capsys, "section", "--model", "nil", "--p", "1,0,1", "--coordinate", "pB", "--T", "50",
                       "--out", str(tmp_path))
    assert code == EXIT_OK
    rows = read_rows(tmp_path / "section.csv")
    assert rows[0] == ["t", "x", "y", "z", "pA", "pB", "pG"] and json.loads(out)["crossings"] == len(rows) - 1
    t = [float(r[0]) for r in rows[1:]]
    assert np.allclose(np.diff(t), 2 * math.pi, atol=1e-4)
    code, out, _ = run(capsys, "rotation", "--model", "e3", "--p", "1,2,3", "--T", "20", "--out", str(tmp_path))
    assert code == EXIT_OK and np.allclose(json.loads(out)["frequencies"], [1, 2, 3], atol=1e-10)
    assert run(capsys, "section", "--coordinate", "w", "--out", str(tmp_path))[0] == EXIT_USAGE


def test_lyapunov_command(capsys, tmp_path):
    code, out, _ = run(capsys, "lyapunov", "--model", "sol", "--T", "50", "--out", str(tmp_path))
    d = json.loads(out)
    assert code == EXIT_OK and d["lambda"] >= 0 and d["monodromyStretch"] == pytest.approx(1.76275, abs=1e-5)
    code, _, err = run(capsys, "lyapunov", "--model", "sol", "--p", "0,1,0", "--T", "50", "--renorm", "50",
                       "--out", str(tmp_path))
    assert code == EXIT_NUMERIC and "renorm" in err


def test_config_precedence(capsys, tmp_path, monkeypatch):
    cfgfile = tmp_path / "run.json"
    cfgfile.write_text(json.dumps({"model": "e3", "p": [1, 0, 0], "T": 2.0, "stride": 100,
                                   "out": str(tmp_path / "fromfile")}))
    # file overrides defaults
    assert run(capsys, "simulate", "--config", str(cfgfile))[0] == EXIT_OK
    meta = json.loads((tmp_path / "fromfile" / "simulate.json").read_text())
    assert meta["model"] == "e3" and meta["T"] == 2.0 and meta["rows"] == 2000 // 100 + 1
    # flags override the file
    assert run(capsys, "simulate", "--config", str(cfgfile), "--T", "1", "--out", str(tmp_path / "flag"))[0] == 0
    meta = json.loads((tmp_path / "flag" / "simulate.json").read_text())
    assert meta["T"] == 1.0 and meta["model"] == "e3"
    # GEOFLOW_OUT overrides the file's directory but not --out
    monkeypatch.setenv("GEOFLOW_OUT", str(tmp_path / "env"))
    assert run(capsys, "simulate", "--config", str(cfgfile))[0] == EXIT_OK
    assert (tmp_path / "env" / "simulate.csv").exists()
    assert run(capsys, "simulate", "--config", str(cfgfile), "--out", str(tmp_path / "flag2"))[0] == EXIT_OK
    assert (tmp_path / "flag2" / "simulate.csv").exists()
    bad = tmp_path / "bad.json"
    bad.write_text("[1, 2]")
    assert run(capsys, "simulate", "--config", str(bad))[0] == EXIT_USAGE
    assert run(capsys, "simulate", "--config", str(tmp_path / "missing.json"))[0] == EXIT_USAGE


def test_prefix_and_no_temp_files_left(capsys, tmp_path):
    assert run(capsys, "simulate", "--T", "1", "--prefix", "orbit", "--out", str(tmp_path))[0] == EXIT_OK
    names = sorted(os.listdir(tmp_path))
    assert names == ["orbit.csv", "orbit.json"]


def test_atomic_write_keeps_old_file_on_failure(tmp_path):
    target = tmp_path / "x.txt"
    target.write_text("old")

    with pytest.raises(TypeError):
        cli._write_atomic(str(target), 123)
    assert target.read_text() == "old"
    assert os.listdir(tmp_path) == ["x.txt"]


def test_deterministic_outputs(capsys, tmp_path):
    for d in ("a", "b"):
        assert run(capsys, "simulate", "--model", "sol", "--T", "5", "--out", str(tmp_path / d))[0] == EXIT_OK
    assert (tmp_path / "a" / "simulate.csv").read_bytes() == (tmp_path / "b" / "simulate.csv").read_bytes()


def test_module_entry_point(tmp_path):
    r = subprocess.run([sys.executable, "-m", "geoflow", "simulate", "--model", "nope", "--out", str(tmp_path)],
                       capture_output=True, text=True)
    assert r.returncode == EXIT_USAGE and "error" in r.stderr
    r = subprocess.run([sys.executable, "-m", "geoflow", "--version"], capture_output=True, text=True)
    assert r.returncode == 0 and "geoflow" in r.stdout
