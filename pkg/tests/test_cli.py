import csv
import subprocess
import sys

import pytest
import yaml

from waveaug import harness
from waveaug.cli import main

CONFIG = {
    "dataset": {"name": "toy", "synthetic": {"timesteps": 900, "channels": 2, "seed": 1}},
    "lookback": 48,
    "horizons": [12],
    "methods": ["none", "freq_mask", "wave_mix"],
    "n_repeats": 2,
    "train": {"epochs": 2, "batch_size": 32, "kernel": 5},
    "policies": {12: {"freq_mask": {"rate": 0.2},
                      "wave_mix": {"wavelet": "db3", "level": 1, "rates": [0.1, 0.9], "sampling_rate": 0.5}}},
}


@pytest.fixture
def config(tmp_path):
    p = tmp_path / "toy.yaml"
    p.write_text(yaml.safe_dump(CONFIG))
    return p


def test_run_and_report(tmp_path, config, capsys):
    out = tmp_path / "out"
    assert main(["run", str(config), "--out", str(out), "--quiet"]) == 0
    assert (out / "metrics.csv").exists()
    rows = list(csv.DictReader((out / "metrics.csv").open()))
    assert [r["method"] for r in rows] == ["none", "wave_mix", "freq_mask"]
    assert len((out / "ledger.jsonl").read_text().splitlines()) == 6

    rep = tmp_path / "rep"
    assert main(["report", str(out / "ledger.jsonl"), "--format", "csv", "--out", str(rep)]) == 0
    assert (rep / "metrics.csv").read_bytes() == (out / "metrics.csv").read_bytes()


def test_output_env(tmp_path, config, monkeypatch):
    monkeypatch.setenv(harness.OUTPUT_ENV, str(tmp_path / "envout"))
    assert main(["run", str(config), "--repeats", "1", "--quiet"]) == 0
    assert len((tmp_path / "envout" / "ledger.jsonl").read_text().splitlines()) == 3


def test_coldstart(tmp_path, config):
    out = tmp_path / "cs"
    assert main(["coldstart", str(config), "--fractions", "0.5", "--repeats", "1", "--out", str(out),
                 "--quiet"]) == 0
    rows = list(csv.DictReader((out / "coldstart.csv").open()))
    assert [float(r["fraction"]) for r in rows] == [0.5, 1.0]
    assert rows[0]["wave_best_method"] == "wave_mix" and rows[0]["freq_best_method"] == "freq_mask"


def test_errors_exit_nonzero(tmp_path, capsys):
    assert main(["run", str(tmp_path / "nope.yaml")]) == 2
    assert "error" in capsys.readouterr().err
    bad = tmp_path / "bad.yaml"
    bad.write_text(yaml.safe_dump({**CONFIG, "methods": ["mixup"]}))
    assert main(["run", str(bad)]) == 2
    assert "mixup" in capsys.readouterr().err
    assert main(["report", str(tmp_path / "missing.jsonl")]) == 2
    assert main(["coldstart", str(bad), "--fractions", "1.5"]) == 2


def test_selftest_module_entry():
    proc = subprocess.run([sys.executable, "-m", "waveaug", "selftest"], capture_output=True, text=True)
    assert proc.returncode == 0, proc.stdout + proc.stderr
    assert proc.stdout.count("PASS") == 6 and "FAIL" not in proc.stdout
