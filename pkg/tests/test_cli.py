import csv
import json
import os
import shutil
import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest

from rbgk_slab import cli
from rbgk_slab.cli import TIMESTAMP_KEY, main
from rbgk_slab.config import parse_config
from rbgk_slab.diagnostics import CertificateReport, CheckResult

CONFIGS = Path(__file__).resolve().parents[1] / "configs"


def read_csv(path):
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    return rows[0], rows[1:]


def last_json_line(text):
    return json.loads([ln for ln in text.splitlines() if ln.startswith("{")][-1])


def write_config(tmp_path, patch):
    raw = json.loads((CONFIGS / "equilibrium.json").read_text())
    raw.update(patch)
    p = tmp_path / "cfg.json"
    p.write_text(json.dumps(raw))
    return p


@pytest.fixture(scope="module")
def verify_run(tmp_path_factory):
    out = tmp_path_factory.mktemp("verify")
    code = main(["--config", str(CONFIGS / "equilibrium.json"), "--out", str(out), "--quiet"])
    return code, out


def test_verify_equilibrium_exit_zero(verify_run):
    code, out = verify_run
    assert code == 0
    assert {p.name for p in out.iterdir()} == {"profiles.csv", "manifest.json", "certificate.txt"}
    assert "overall: PASS" in (out / "certificate.txt").read_text()


def test_profiles_shape_and_precision(verify_run):
    _, out = verify_run
    header, rows = read_csv(out / "profiles.csv")
    cfg = parse_config((CONFIGS / "equilibrium.json").read_text())
    assert len(rows) == cfg.grid.K + 1
    assert header[0] == "x [slab widths]" and all("[" in h for h in header)
    data = np.array(rows, dtype=float)
    assert data[0, 0] == 0.0 and data[-1, 0] == 1.0
    # 17 significant digits round-trip doubles exactly
    assert all(float(v) == float(format(float(v), ".17g")) for v in rows[3])
    assert any(len(v.replace("-", "").replace(".", "").split("e")[0]) == 17 for v in rows[3])
    for name in ("n_A [1/volume]", "beta_tilde [1/energy]", "S1 [k/(area time)]", "T11 [momentum/(area time)]"):
        col = data[:, header.index(name)]
        assert np.max(np.abs(col - col[0])) <= 1e-10 * max(1.0, abs(col[0]))
    assert data[:, header.index("beta_tilde [1/energy]")] == pytest.approx(1.0, rel=1e-8)


def test_manifest_contents(verify_run):
    _, out = verify_run
    man = json.loads((out / "manifest.json").read_text())
    assert man["status"] == "ok" and man["exit_code"] == 0 and man["mode"] == "verify"
    assert man["certificate"]["passed"] is True
    cfg = parse_config(json.dumps(man["config"]))
    assert cfg.grid.p_max == pytest.approx(30.0)
    assert len(man["grids"]["momentum_sha256"]) == 64
    assert TIMESTAMP_KEY in man


def test_outputs_deterministic(verify_run, tmp_path):
    _, out = verify_run
    assert main(["--config", str(CONFIGS / "equilibrium.json"), "--out", str(tmp_path), "--quiet", "--seed", "3"]) == 0
    assert (out / "profiles.csv").read_bytes() == (tmp_path / "profiles.csv").read_bytes()
    assert (out / "certificate.txt").read_bytes() == (tmp_path / "certificate.txt").read_bytes()
    a = json.loads((out / "manifest.json").read_text())
    b = json.loads((tmp_path / "manifest.json").read_text())
    a.pop(TIMESTAMP_KEY)
    b.pop(TIMESTAMP_KEY)
    assert a == b


def test_schema_error_exit_2(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"species": [{"label": "A", "mass": -1}]}))
    assert main(["--config", str(bad), "--out", str(tmp_path)]) == 2
    err = last_json_line(capsys.readouterr().err)
    assert err["exit_code"] == 2 and err["type"] == "SchemaError" and "species[0].mass" in err["message"]


def test_invalid_boundary_exit_3(tmp_path, capsys):
    cfg = write_config(tmp_path, {"grid": {"p_max": 4.0, "n_p1": 16, "n_rho": 8, "K": 8}})
    assert main(["--config", str(cfg), "--out", str(tmp_path)]) == 3
    assert last_json_line(capsys.readouterr().err)["type"] == "InvalidBoundary"


def test_not_converged_exit_4_writes_manifest(tmp_path, capsys):
    assert main(["--config", str(CONFIGS / "not_converged.json"), "--out", str(tmp_path), "--quiet"]) == 4
    man = json.loads((tmp_path / "manifest.json").read_text())
    assert man["status"] == "not_converged" and man["exit_code"] == 4
    assert man["iteration"]["iterations"] == 25
    assert not (tmp_path / "profiles.csv").exists()
    assert last_json_line(capsys.readouterr().err)["exit_code"] == 4


def test_missing_config_exit_5(tmp_path):
    assert main(["--config", str(tmp_path / "nope.json"), "--out", str(tmp_path)]) == 5


def test_missing_table_exit_5(tmp_path):
    shutil.copy(CONFIGS / "tabulated.json", tmp_path / "tabulated.json")
    assert main(["--config", str(tmp_path / "tabulated.json"), "--out", str(tmp_path)]) == 5


@pytest.mark.skipif(os.geteuid() == 0, reason="root ignores directory permissions")
def test_unwritable_out_exit_5(tmp_path):
    locked = tmp_path / "locked"
    locked.mkdir()
    locked.chmod(0o500)
    try:
        assert main(["moments", "--config", str(CONFIGS / "equilibrium.json"), "--out", str(locked / "x")]) == 5
    finally:
        locked.chmod(0o700)


def test_out_path_is_a_file_exit_5(tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("")
    assert main(["moments", "--config", str(CONFIGS / "equilibrium.json"), "--out", str(blocker / "sub")]) == 5


def test_certificate_failure_exit_6(tmp_path, monkeypatch):
    failing = CertificateReport()
    failing.add("injected", CheckResult(False, -1.0))
    monkeypatch.setattr(cli, "certify", lambda *a, **k: failing)
    assert main(["--config", str(CONFIGS / "equilibrium.json"), "--out", str(tmp_path), "--quiet"]) == 6
    man = json.loads((tmp_path / "manifest.json").read_text())
    assert man["status"] == "certificate_failed" and man["exit_code"] == 6
    assert "FAIL  injected" in (tmp_path / "certificate.txt").read_text()


def test_moments_mode(tmp_path):
    assert main(["moments", "--config", str(CONFIGS / "tabulated.json"), "--out", str(tmp_path), "--quiet"]) == 0
    header, rows = read_csv(tmp_path / "constants.csv")
    assert header == ["quantity", "species", "value"]
    vals = {(q, s): float(v) for q, s, v in rows}
    assert vals[("lambda", "T")] > 1
    assert 0 < vals[("gamma", "")] < 1
    man = json.loads((tmp_path / "manifest.json").read_text())
    assert man["mode"] == "moments" and "constants" in man


def test_scan_mode(tmp_path):
    cfg = write_config(tmp_path, {"grid": {"n_p1": 16, "n_rho": 8, "K": 8}, "scan": {"scales": [0.0, 1.0, 2.0]}})
    assert main(["scan", "--config", str(cfg), "--out", str(tmp_path), "--quiet"]) == 0
    header, rows = read_csv(tmp_path / "scan.csv")
    assert header == ["scale", "converged", "iterations", "sup_delta", "reason"]
    assert [r[1] for r in rows] == ["true"] * 3
    man = json.loads((tmp_path / "manifest.json").read_text())
    assert man["scan"]["largest_converged"] == 2.0


def test_collisionless_verify(tmp_path):
    raw = json.loads((CONFIGS / "equilibrium.json").read_text())
    raw["species"][0]["omega"] = 0.0
    raw["grid"].update({"n_p1": 16, "n_rho": 8, "K": 8})
    (tmp_path / "c.json").write_text(json.dumps(raw))
    assert main(["--config", str(tmp_path / "c.json"), "--out", str(tmp_path), "--quiet"]) == 0
    header, rows = read_csv(tmp_path / "profiles.csv")
    assert rows[0][header.index("beta_tilde [1/energy]")] == "nan"
    assert "not applicable" in (tmp_path / "certificate.txt").read_text()


def test_console_script_version():
    res = subprocess.run(
        [sys.executable, "-m", "rbgk_slab.cli", "--version"], capture_output=True, text=True, check=False
    )
    assert res.returncode == 0 and "0.1.0" in res.stdout
