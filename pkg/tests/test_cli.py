import json
import subprocess
import sys

import numpy as np
import pytest

from asrsim.cli import EXIT_CONFIG, EXIT_IO, EXIT_NUMERIC, EXIT_OK, main
from asrsim.scheduler import random_instance, save_instance

SMALL = ["--trials", "3", "--eta_bar_sweep", "1:3:1", "--num_ues", "6"]


def test_simulate_writes_outputs(tmp_path, capsys):
    out = tmp_path / "run"
    assert main(["simulate", "--out", str(out), "--tables", *SMALL]) == EXIT_OK
    lines = (out / "plotdata.csv").read_text().splitlines()
    assert len(lines) == 1 + 2 * 3  # two modes, three thresholds
    manifest = (out / "manifest.txt").read_text()
    assert "config_hash = " in manifest and "code_version = " in manifest
    assert (out / "feasibility_ASR_k6.csv").exists() and (out / "channels_SR_k6.csv").exists()


def test_config_file_and_flag_override(tmp_path):
    cfg = tmp_path / "s.cfg"
    cfg.write_text("num_ues = 4\ntrials = 2\neta_bar_sweep = 2\nmodes = SR\n")
    assert main(["simulate", "--config", str(cfg), "--out", str(tmp_path / "o"), "--num-ues=5"]) == EXIT_OK
    row = (tmp_path / "o" / "plotdata.csv").read_text().splitlines()[1].split(",")
    assert row[0] == "SR" and row[4] == "5"


def test_rerun_from_manifest_is_identical(tmp_path):
    main(["simulate", "--out", str(tmp_path / "a"), *SMALL])
    main(["simulate", "--config", str(tmp_path / "a" / "manifest.txt"), "--out", str(tmp_path / "b")])
    assert (tmp_path / "a" / "plotdata.csv").read_bytes() == (tmp_path / "b" / "plotdata.csv").read_bytes()


@pytest.mark.parametrize("argv,code", [
    (["simulate", "--bogus", "1"], EXIT_CONFIG),
    (["simulate", "--num_ues", "many"], EXIT_CONFIG),
    (["simulate", "--radius", "-5"], EXIT_CONFIG),
    (["simulate", "--config", "/nonexistent/file.cfg"], EXIT_IO),
    (["schedule", "solve", "/nonexistent.json"], EXIT_IO),
    (["frobnicate"], EXIT_CONFIG),
    (["codebook", "export", "--levels", "7"], EXIT_CONFIG),
])
def test_exit_codes(argv, code, capsys):
    assert main(argv) == code


def test_unwritable_output(tmp_path):
    blocker = tmp_path / "f"
    blocker.write_text("")
    assert main(["simulate", "--out", str(blocker / "x"), *SMALL]) == EXIT_IO


def test_codebook_export(tmp_path):
    path = tmp_path / "p.csv"
    assert main(["codebook", "export", "--out", str(path), "--step", "1"]) == EXIT_OK
    lines = path.read_text().splitlines()
    assert lines[0] == "beam_id,panel,level,theta_deg,gain_db"
    assert len(lines) == 1 + 255 * 181
    assert main(["codebook", "export", "--dft", "16", "--out", str(path)]) == EXIT_OK


def test_schedule_solve(tmp_path, capsys):
    inst = tmp_path / "i.json"
    save_instance(random_instance(np.random.default_rng(0), 8, 4, 2), inst)
    out = tmp_path / "sol.json"
    for method in ("exact", "greedy", "bruteforce"):
        assert main(["schedule", "solve", str(inst), "--method", method, "--out", str(out)]) == EXIT_OK
        sol = json.loads(out.read_text())
        assert sol["constraint_errors"] == [] and sol["method"] == method


def test_schedule_bad_inputs(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert main(["schedule", "solve", str(bad)]) == EXIT_IO
    bad.write_text(json.dumps({"q_slots": 1}))
    assert main(["schedule", "solve", str(bad)]) == EXIT_CONFIG
    big = tmp_path / "big.json"
    save_instance(random_instance(np.random.default_rng(0), 14, 9, 2), big)
    assert main(["schedule", "solve", str(big), "--method", "bruteforce"]) == EXIT_CONFIG


def test_oracle_check(capsys):
    assert main(["oracle-check", "--instances", "30", "--max-ues", "8", "--max-beams-per-panel", "5"]) == EXIT_OK
    assert "0 mismatches" in capsys.readouterr().out
    assert main(["oracle-check", "--instances", "10", "--capacity-mode", "per_beam_n"]) == EXIT_OK


def test_numeric_error_code(monkeypatch):
    import asrsim.cli as cli

    real = cli.solve_exact

    def broken(inst):
        sol = real(inst)
        sol.objective += 1.0
        return sol

    monkeypatch.setattr(cli, "solve_exact", broken)
    assert main(["oracle-check", "--instances", "3"]) == EXIT_NUMERIC


def test_console_script_entry_point():
    out = subprocess.run([sys.executable, "-m", "asrsim.cli", "--version"], capture_output=True, text=True)
    assert out.returncode == 0 and "asrsim" in out.stdout
