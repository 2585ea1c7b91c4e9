import json

import pytest

from mhdlab.cli import main


@pytest.fixture
def cfg(tmp_path):
    p = tmp_path / "tg.yaml"
    p.write_text("preset: taylor_green\nn: 16\nhorizon: 0.04\noutput:\n  every: 1\n  checkpoint_every: 2\n")
    return p


def test_run_and_audit(cfg, tmp_path, capsys):
    out = tmp_path / "out"
    assert main(["run", "--config", str(cfg), "--out", str(out)]) == 0
    assert "horizon_reached" in capsys.readouterr().out
    assert (out / "timeseries.csv").exists() and (out / "summary.json").exists()
    ck = sorted(out.glob("state_*.mhd3"))
    assert len(ck) >= 2
    assert main(["audit", "--ckpt-a", str(ck[0]), "--ckpt-b", str(ck[1])]) == 0
    rep = json.loads(capsys.readouterr().out)
    assert rep["kinetic"] > 0 and abs(rep["identity_residual_36"]) < 1e-3


def test_resume(cfg, tmp_path, capsys):
    out = tmp_path / "out"
    main(["run", "--config", str(cfg), "--out", str(out)])
    first = (out / "timeseries.csv").read_bytes()
    assert main(["run", "--config", str(cfg), "--out", str(tmp_path / "r"),
                 "--resume", str(out / "state_000002.mhd3")]) == 0
    assert (tmp_path / "r" / "timeseries.csv").read_bytes() == first


def test_check_inequalities(capsys):
    assert main(["check-inequalities", "--seed", "3", "--trials", "4", "--n", "8"]) == 0
    rep = json.loads(capsys.readouterr().out)
    assert rep["weak_violations"] == 0 and rep["M"] >= 1.0


def test_bisect_degenerate(cfg, capsys):
    assert main(["bisect", "--config", str(cfg), "--lo", "1", "--hi", "1"]) == 0
    assert json.loads(capsys.readouterr().out)["status"] == "degenerate"


def test_config_errors(tmp_path, capsys):
    assert main(["run", "--config", str(tmp_path / "missing.yaml")]) == 2
    bad = tmp_path / "bad.yaml"
    bad.write_text("preset: taylor_green\ndiagnostics:\n  serrin_r: 3\n")
    assert main(["run", "--config", str(bad)]) == 2
    assert "admissible range" in capsys.readouterr().err


def test_audit_bad_checkpoint(tmp_path, capsys):
    junk = tmp_path / "junk.mhd3"
    junk.write_bytes(b"nope" * 20)
    assert main(["audit", "--ckpt-a", str(junk), "--ckpt-b", str(junk)]) == 2


def test_fault_exit_code(tmp_path):
    p = tmp_path / "v.yaml"
    p.write_text("preset: vacuum_blob\nn: 16\nhorizon: 0.1\nscheme:\n  floor_fraction: 0.0\n")
    assert main(["run", "--config", str(p), "--out", str(tmp_path / "o")]) == 3
