import json
import subprocess
import sys

import pytest

from cvqce import cli

SMALL = {
    "seed": 5,
    "input": {"kind": "coherent", "alpha": [0.5, 0.0], "v_in": 0.2},
    "encryption": {"v_enc": 10.0},
    "channel": {"t_forward": 0.9, "t_backward": 0.9},
    "program": [{"gate": "Squeeze", "params": [0.3]}, {"gate": "F"}],
    "backend": {"kind": "gaussian", "dim": 40},
    "outputs": {"wigner": True, "wigner_extent": 6.0, "wigner_points": 21},
}


def write_cfg(tmp_path, cfg, name="s.cfg"):
    path = tmp_path / name
    path.write_text(json.dumps(cfg))
    return str(path)


def snapshot(directory):
    return {p.name: p.read_bytes() for p in sorted(directory.iterdir())}


def test_help_lists_subcommands():
    out = subprocess.run([sys.executable, "-m", "cvqce", "--help"], capture_output=True, text=True, check=True).stdout
    for cmd in ("verify", "run", "sweep", "estimate"):
        assert cmd in out


def test_verify_passes(tmp_path):
    assert cli.main(["verify", "--fuzz", "20", "--out", str(tmp_path)]) == 0
    report = json.loads((tmp_path / "verify_report.json").read_text())
    assert report["ok"]


def test_verify_inject_fault_fails_on_u2(tmp_path, capsys):
    assert cli.main(["verify", "--fuzz", "5", "--inject-fault", "--out", str(tmp_path)]) == 1
    report = json.loads((tmp_path / "verify_report.json").read_text())
    failed = [r["identity"] for r in report["rows"] if not r["ok"]]
    assert failed == ["TableI:U2"]
    assert "U2" in capsys.readouterr().out


def test_run_writes_artifacts(tmp_path):
    assert cli.main(["run", write_cfg(tmp_path, SMALL), "--out", str(tmp_path / "o")]) == 0
    names = set(snapshot(tmp_path / "o"))
    assert {"transcript.json", "moments.csv", "snr.json", "wigner_decrypted.csv", "wigner_decrypted.json"} <= names
    header = (tmp_path / "o" / "wigner_decrypted.csv").read_text().splitlines()[0]
    assert header == "q,p,W"


def test_run_fock_backend_agrees(tmp_path):
    cfg = dict(SMALL, outputs={"wigner": False})
    assert cli.main(["run", write_cfg(tmp_path, cfg), "--backend", "fock", "--out", str(tmp_path / "o")]) == 0
    rows = (tmp_path / "o" / "moments.csv").read_text().splitlines()
    assert any("fock" in r for r in rows)


def test_unknown_key_rejected(tmp_path, capsys):
    cfg = dict(SMALL, colour="blue")
    assert cli.main(["run", write_cfg(tmp_path, cfg), "--out", str(tmp_path)]) == 2
    assert "colour" in capsys.readouterr().err


def test_malformed_json_reports_line(tmp_path, capsys):
    path = tmp_path / "bad.cfg"
    path.write_text('{\n  "seed": 1,\n  oops\n}')
    assert cli.main(["run", str(path), "--out", str(tmp_path)]) == 2
    assert "line 3" in capsys.readouterr().err


def test_cubic_requires_fock_backend(tmp_path):
    cfg = dict(SMALL, program=[{"gate": "U3", "params": [0.05]}])
    assert cli.main(["run", write_cfg(tmp_path, cfg), "--out", str(tmp_path)]) == 2


def test_bundled_scenario_resolves(tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    cfg = cli.load_config("displacement_gate.cfg")
    assert cfg["seed"] == 2017


def test_sweep_mutual_info(tmp_path, capsys):
    assert cli.main(["sweep", "mutual-info", "--v-in", "0.6", "--v-enc", "1:10:4", "--out", str(tmp_path)]) == 0
    lines = (tmp_path / "mutual-info.csv").read_text().splitlines()
    assert lines[0] == "param,metric,value,stderr" and len(lines) == 5


def test_sweep_bad_grid_exits_2(tmp_path):
    assert cli.main(["sweep", "fidelity-vs-t", "--grid", "0.5:1.5:3", "--out", str(tmp_path)]) == 2


def test_sweep_bad_range_is_usage_error(tmp_path):
    with pytest.raises(SystemExit) as exc:
        cli.main(["sweep", "mutual-info", "--v-enc", "a:b", "--out", str(tmp_path)])
    assert exc.value.code == 2


def test_estimate_writes_report(tmp_path):
    assert cli.main(["estimate", "--t", "0.8", "--probes", "500", "--compare", "--out", str(tmp_path)]) == 0
    rep = json.loads((tmp_path / "estimate.json").read_text())
    assert abs(rep["t_hat"] - 0.8) < 0.02
    for row in rep["compare"]["rows"]:
        if row["t"] == 1.0:
            continue
        assert row["fidelity_estimated"] >= row["fidelity_naive"] - 1e-12


def test_estimate_rejects_bad_t(tmp_path):
    assert cli.main(["estimate", "--t", "1.5", "--out", str(tmp_path)]) == 2


def test_output_dir_from_environment(tmp_path, monkeypatch):
    monkeypatch.setenv(cli.OUTPUT_ENV, str(tmp_path / "env"))
    assert cli.main(["sweep", "purity", "--delta", "0,1"]) == 0
    assert (tmp_path / "env" / "purity.csv").exists()
