import csv
import io
import json
import subprocess
import sys

import pytest
import yaml

from randpoly.cli import main

CONFIG = {"body": {"kind": "ball", "dim": 2}, "model": "circumscribed", "functional": "facets",
          "schedule": [8, 16, 32], "replications": 20, "seed": 1, "name": "cli"}


@pytest.fixture
def config_file(tmp_path):
    p = tmp_path / "cfg.yaml"
    p.write_text(yaml.safe_dump(CONFIG))
    return p


def test_run_writes_outputs(config_file, tmp_path, capsys):
    assert main(["run", "--config", str(config_file), "--out", str(tmp_path / "o")]) == 0
    out = capsys.readouterr().out
    assert out.startswith("functional,body,density")
    assert "# fit facets-circumscribed" in out
    for ext in ("csv", "json", "dat", "png"):
        assert (tmp_path / "o" / f"cli.{ext}").exists()


def test_env_and_flag_overrides(config_file, tmp_path, monkeypatch, capsys):
    monkeypatch.setenv("RANDPOLY_SEED", "11")
    main(["run", "--config", str(config_file), "--out", str(tmp_path / "a")])
    a = (tmp_path / "a" / "cli.csv").read_text()
    main(["run", "--config", str(config_file), "--out", str(tmp_path / "b"), "--seed", "11", "--threads", "1"])
    b = (tmp_path / "b" / "cli.csv").read_text()
    assert a == b and ",11," in a
    monkeypatch.setenv("RANDPOLY_THREADS", "many")
    assert main(["run", "--config", str(config_file), "--out", str(tmp_path / "c")]) == 2


def test_bad_config_exit_code(tmp_path, capsys):
    p = tmp_path / "bad.yaml"
    p.write_text(yaml.safe_dump({**CONFIG, "model": "inscribed"}))
    assert main(["run", "--config", str(p)]) == 2
    assert "error:" in capsys.readouterr().err
    assert main(["run", "--config", str(tmp_path / "missing.yaml")]) == 2


def test_theory_command(capsys, tmp_path):
    assert main(["theory", "--body", '{"kind": "ball", "dim": 2}', "--tag", "mainmean"]) == 0
    row = list(csv.DictReader(io.StringIO(capsys.readouterr().out)))[0]
    assert float(row["value"]) == pytest.approx(5.370541219355306, rel=1e-12)
    body = tmp_path / "e.json"
    body.write_text(json.dumps({"kind": "ellipsoid", "params": {"semi_axes": [2.0, 1.0]}}))
    assert main(["theory", "--body", str(body), "--tag", "gener1", "--density", "q-power"]) == 0
    row = list(csv.DictReader(io.StringIO(capsys.readouterr().out)))[0]
    assert row["body"] == "ellipsoid(2.0,1.0)"
    assert float(row["value"]) == pytest.approx(4.262601390621603, rel=1e-9)
    assert main(["theory", "--body", '{"kind": "ball", "dim": 3}', "--tag", "omega_p"]) == 2


def test_check_exit_codes(capsys):
    assert main(["check", "--suite", "identities"]) == 0
    out = capsys.readouterr().out
    assert out.count("PASS") >= 6 and "FAIL" not in out


def test_check_failure_sets_exit_code(monkeypatch, capsys):
    from randpoly import cli
    from randpoly.checks import CheckResult

    monkeypatch.setitem(cli.SUITES, "identities", lambda: [CheckResult("identities", "forced", False, "x")])
    assert main(["check", "--suite", "identities"]) == 1
    assert "FAIL [identities] forced" in capsys.readouterr().out


def test_console_script_entry():
    res = subprocess.run([sys.executable, "-m", "randpoly.cli", "check", "--suite", "transforms"],
                         capture_output=True, text=True, timeout=300)
    assert res.returncode == 0, res.stdout + res.stderr
    assert "FAIL" not in res.stdout
