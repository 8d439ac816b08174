import csv
from pathlib import Path

import pytest
import yaml

from parade.cli import main

SCENARIOS = Path(__file__).resolve().parents[1] / "scenarios"
OUTPUTS = ("trajectory.csv", "events.txt", "report.txt", "plot.svg")


def test_simulate_builtin(tmp_path, capsys):
    assert main(["simulate", "all-home", "--out", str(tmp_path)]) == 0
    for name in OUTPUTS:
        assert (tmp_path / name).stat().st_size > 0
    report = yaml.safe_load((tmp_path / "report.txt").read_text())
    assert report["M"] == 20 and report["N_final"] == 20
    assert "N = 20 of M = 20" in capsys.readouterr().out


def test_simulate_file(tmp_path):
    assert main(["simulate", str(SCENARIOS / "symmetric-pair.yaml"), "--out", str(tmp_path)]) == 0
    events = yaml.safe_load((tmp_path / "events.txt").read_text())
    assert [e["kind"] for e in events] == ["merge", "arrival"]
    assert events[0]["t"] == pytest.approx(1.0, abs=1e-8)


def test_verify_fixture(tmp_path, capsys):
    code = main(["verify", str(SCENARIOS / "theorem1-fixture.yaml"), "--out", str(tmp_path)])
    assert code == 0
    out = capsys.readouterr().out
    assert "theorem 1:" in out and "bound_T=40" in out
    certs = yaml.safe_load((tmp_path / "certificates.txt").read_text())
    first = next(c for c in certs if c["theorem"] == 1)
    assert first["bound_T"] == pytest.approx(40.0) and first["witnessed"]


def test_invalid_scenario_exit_4(tmp_path, capsys):
    text = (SCENARIOS / "constant-speed.yaml").read_text().replace("kappa: 3", "kappa: 1")
    bad = tmp_path / "bad.yaml"
    bad.write_text(text)
    assert main(["simulate", str(bad), "--out", str(tmp_path / "o")]) == 4
    assert "kappa" in capsys.readouterr().err


def test_missing_file_exit_3(tmp_path, capsys):
    assert main(["simulate", str(tmp_path / "nope.yaml")]) == 3
    assert "nope.yaml" in capsys.readouterr().err


def test_usage_exit_2():
    with pytest.raises(SystemExit) as exc:
        main(["simulate"])
    assert exc.value.code == 2
    with pytest.raises(SystemExit) as exc:
        main(["sweep", "all-home", "--seeds", "5..1"])
    assert exc.value.code == 2


def test_engine_failure_exit_5(tmp_path):
    text = (SCENARIOS / "symmetric-pair.yaml").read_text().replace("max_events: 100", "max_events: 1")
    path = tmp_path / "capped.yaml"
    path.write_text(text)
    assert main(["simulate", str(path), "--out", str(tmp_path / "o")]) == 5


def test_list_builtins(capsys):
    assert main(["list-builtins"]) == 0
    names = capsys.readouterr().out.split()
    assert names == ["all-home", "two-left-in-water", "one-frozen-in-water", "frozen-on-shore"]


def test_sweep(tmp_path):
    assert main(["sweep", str(SCENARIOS / "theorem1-fixture.yaml"), "--seeds", "0..2", "--out", str(tmp_path)]) == 0
    rows = list(csv.DictReader((tmp_path / "summary.csv").open()))
    assert [r["seed"] for r in rows] == ["0", "1", "2"]
    assert all(int(r["M"]) >= 3 for r in rows)
    for s in range(3):
        assert (tmp_path / f"seed-{s}" / "report.txt").exists()


def test_sweep_parallel_matches_serial(tmp_path):
    fixture = str(SCENARIOS / "theorem1-fixture.yaml")
    main(["sweep", fixture, "--seeds", "3..4", "--out", str(tmp_path / "a")])
    main(["sweep", fixture, "--seeds", "3..4", "--jobs", "2", "--out", str(tmp_path / "b")])
    assert (tmp_path / "a" / "summary.csv").read_bytes() == (tmp_path / "b" / "summary.csv").read_bytes()


def test_parade_out_env(tmp_path, monkeypatch):
    monkeypatch.setenv("PARADE_OUT", str(tmp_path))
    assert main(["simulate", str(SCENARIOS / "constant-speed.yaml")]) == 0
    assert (tmp_path / "constant-speed" / "trajectory.csv").exists()
