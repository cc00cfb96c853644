import csv
import os
import subprocess
import sys

import pytest

from wavebreak.cli import main


def _run(argv, capsys):
    code = main(argv)
    out = capsys.readouterr()
    return code, out.out, out.err


def test_certify_is_byte_identical_and_exits_fail(capsys):
    argv = ["certify", "--model", "fkdv", "--alpha", "0.5", "--grid", "256"]
    c1, out1, _ = _run(argv, capsys)
    c2, out2, _ = _run(argv, capsys)
    assert c1 == c2 == 2
    assert out1 == out2
    assert out1.rstrip().endswith("overall=fail")


def test_alpha_out_of_range_exits_error(capsys):
    code, _, err = _run(["certify", "--alpha", "0", "--grid", "256"], capsys)
    assert code == 1
    assert "alpha out of range" in err
    code, _, err = _run(["certify", "--alpha", "1.2", "--grid", "256"], capsys)
    assert code == 1 and "alpha out of range" in err


def test_missing_init_file_exits_error(capsys, tmp_path):
    code, _, err = _run(["certify", "--alpha", "0.5", "--init", "file", "--init-file",
                         str(tmp_path / "nope.csv")], capsys)
    assert code == 1 and err.startswith("error type=")


def test_verify_n3_passes(capsys, tmp_path):
    out = tmp_path / "n3.csv"
    code, stdout, _ = _run(["verify", "--lemma", "n3", "--out", str(out)], capsys)
    assert code == 0
    assert "all_pass=true" in stdout
    with open(out) as fh:
        rows = list(csv.reader(line for line in fh if not line.startswith("#")))
    assert rows[0] == ["name", "params", "lhs", "rhs", "ratio", "pass"]
    assert len(rows) == 1 + 2 * 4 * 58


def test_verify_splitting_reports_failure_at_large_alpha(capsys, tmp_path):
    code, stdout, _ = _run(["verify", "--lemma", "splitting", "--alphas", "0.9", "--orders", "0",
                            "--grid", "256", "--out", str(tmp_path / "s.csv")], capsys)
    assert code == 2
    assert "all_pass=false" in stdout


def test_kernel_csv(tmp_path, capsys):
    out = tmp_path / "k.csv"
    code, _, _ = _run(["kernel", "--points", "30", "--out", str(out)], capsys)
    assert code == 0
    lines = out.read_text().splitlines()
    assert lines[0].startswith("# Whitham kernel") and "k0=" in lines[0]
    assert lines[1] == "x,K,Kprime,sqrt_2pix_K"
    assert len(lines) == 32


def test_simulate_artifacts_and_config_round_trip(tmp_path, capsys):
    first = tmp_path / "a"
    argv = ["simulate", "--model", "fkdv", "--alpha", "1", "--grid", "256", "--t-max", "0.5",
            "--seeds", "4", "--out", str(first)]
    code, stdout, _ = _run(argv, capsys)
    assert code == 0 and "detected=" in stdout
    names = set(os.listdir(first))
    assert {"config.txt", "timeseries.csv", "snapshot_initial.csv", "snapshot_final.csv",
            "breaking_report.txt", "sigma_gamma0.3.txt", "paths"} <= names
    assert len(os.listdir(first / "paths")) == 5

    second = tmp_path / "b"
    code, _, _ = _run(["simulate", "--config", str(first / "config.txt"), "--out", str(second)], capsys)
    assert code == 0
    assert (first / "timeseries.csv").read_bytes() == (second / "timeseries.csv").read_bytes()


def test_config_rejects_unknown_key(tmp_path, capsys):
    cfg = tmp_path / "c.txt"
    cfg.write_text("grid=256\nbogus=1\n")
    code, _, err = _run(["certify", "--config", str(cfg)], capsys)
    assert code == 1 and "bogus" in err


def test_sweep_index(tmp_path, capsys):
    out = tmp_path / "sw"
    code, _, _ = _run(["sweep", "--alphas", "1", "--amplitudes", "1,2", "--epsilons", "0.1",
                       "--grid", "256", "--t-max", "0.3", "--jobs", "1", "--out", str(out)], capsys)
    assert code == 0
    with open(out / "index.csv") as fh:
        rows = list(csv.reader(line for line in fh if not line.startswith("#")))
    assert rows[0][:4] == ["alpha", "epsilon", "amplitude", "outcome"]
    assert len(rows) == 3


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "wavebreak", "certify", "--alpha", "0.5", "--grid", "128"],
                          capture_output=True, text=True)
    assert proc.returncode == 2
    assert "overall=fail" in proc.stdout
