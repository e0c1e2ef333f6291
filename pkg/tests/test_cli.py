import json
import subprocess
import sys

import numpy as np
import pytest

from l1recover import io as l1io
from l1recover.cli import main, parse_config, parse_range
from l1recover.ensembles import fourier_ensemble, gaussian_ensemble
from l1recover.errors import UsageError
from l1recover.seeding import Seed


@pytest.fixture(autouse=True)
def _isolated_output(tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    monkeypatch.delenv("L1RECOVER_OUTPUT_DIR", raising=False)


def test_no_arguments_prints_usage_and_exits_2(capsys):
    assert main([]) == 2
    assert "usage" in capsys.readouterr().err


def test_console_entry_point_exit_code():
    proc = subprocess.run([sys.executable, "-m", "l1recover.cli"], capture_output=True, text=True)
    assert proc.returncode == 2 and "usage" in proc.stderr


def test_parse_phase_example():
    cfg = parse_config("phase --ensemble gaussian -N 256 -K 64 --sparsity 2..24..2 --trials 100 --seed 7 -o out.csv".split())
    assert cfg.command == "phase"
    assert cfg["N"] == 256 and cfg["K"] == (64,) and cfg["trials"] == 100 and cfg["seed"] == 7
    assert cfg["sparsity"] == tuple(range(2, 25, 2))
    assert cfg["output"] == "out.csv" and cfg["ensemble"] == "gaussian"


def test_zero_length_is_usage_error(capsys):
    with pytest.raises(UsageError, match="N"):
        parse_config(["phase", "-N", "0"])
    assert main(["phase", "-N", "0"]) == 2


def test_bad_values_rejected():
    for argv in (["phase", "--ensemble", "walsh"], ["phase", "--trials", "x"], ["phase", "--sparsity", "2..x"],
                 ["recover"], ["phase", "--tau", "1.5"], ["phase", "--nonsense", "1"]):
        with pytest.raises(UsageError):
            parse_config(argv)


def test_parse_range_forms():
    assert parse_range("2..6..2") == (2, 4, 6)
    assert parse_range("1..3") == (1, 2, 3)
    assert parse_range("32,64") == (32, 64)


def test_config_file_unknown_key_named(tmp_path, capsys):
    (tmp_path / "run.ini").write_text("N = 64\nbogus_key = 3\n")
    assert main(["phase", "--config", "run.ini"]) == 2
    assert "bogus_key" in capsys.readouterr().err


def test_flags_override_config_file(tmp_path):
    (tmp_path / "run.ini").write_text("[run]\nN = 64\nK = 16\ntrials = 9\n")
    cfg = parse_config(["phase", "--config", "run.ini", "--trials", "3"])
    assert cfg["N"] == 64 and cfg["K"] == (16,) and cfg["trials"] == 3


def test_recover_writes_fsharp(tmp_path, capsys):
    M = gaussian_ensemble(32, 16, Seed(1, 0))
    f = np.zeros(32)
    f[[2, 9]] = [1.5, -0.5]
    l1io.write_matrix_binary(tmp_path / "M.bin", M)
    l1io.write_signal_csv(tmp_path / "y.csv", M.matrix @ f)
    assert main(["recover", "--matrix", "M.bin", "--y", "y.csv", "-o", "fs.csv"]) == 0
    out = capsys.readouterr().out
    assert "l1 value" in out and "duality gap" in out
    np.testing.assert_allclose(l1io.read_signal_csv(tmp_path / "fs.csv"), f, atol=1e-7)
    manifest = json.loads((tmp_path / "fs.manifest.json").read_text())
    assert manifest["result"]["status"] == "optimal" and manifest["config"]["matrix"] == "M.bin"


def test_recover_fourier_from_csv(tmp_path):
    M = fourier_ensemble(32, 0.5, Seed(2, 0))
    f = np.zeros(32)
    f[5] = 1
    l1io.write_matrix_csv(tmp_path / "F.csv", M.matrix)
    l1io.write_signal_csv(tmp_path / "y.csv", M.matrix @ f)
    assert main(["recover", "--matrix", "F.csv", "--y", "y.csv"]) == 0
    np.testing.assert_allclose(l1io.read_signal_csv(tmp_path / "fsharp.csv"), f, atol=1e-7)


def test_recover_inconsistent_data_is_numerical_failure(tmp_path):
    r = np.ones(4)
    l1io.write_matrix_csv(tmp_path / "M.csv", np.vstack([r, r]))
    l1io.write_signal_csv(tmp_path / "y.csv", np.array([1.0, 2.0]))
    assert main(["recover", "--matrix", "M.csv", "--y", "y.csv"]) == 1


def test_audit_uup_exhaustive_rows(tmp_path):
    assert main(["audit-uup", "-N", "12", "-K", "6", "--m", "2", "-o", "uup.csv"]) == 0
    lines = (tmp_path / "uup.csv").read_text().splitlines()
    assert len(lines) == 1 + 12 + 66
    summary = json.loads((tmp_path / "uup.summary.json").read_text())
    assert summary["mode"] == "exhaustive" and summary["subsets_audited"] == 78


def test_encode_decode_reports_distortion(tmp_path, capsys):
    f = np.zeros(64)
    f[[3, 30, 41]] = [1.0, -2.0, 0.5]
    l1io.write_signal_csv(tmp_path / "f.csv", f)
    assert main(["encode-decode", "--signal", "f.csv", "-K", "32", "--q", "0.05", "-o", "dec.csv"]) == 0
    out = capsys.readouterr().out
    assert "distortion" in out
    dec = l1io.read_signal_csv(tmp_path / "dec.csv")
    assert np.linalg.norm(dec - f) < 0.5
    res = json.loads((tmp_path / "dec.manifest.json").read_text())["result"]
    assert res["rows_received"] == 32


def test_output_dir_from_environment(tmp_path, monkeypatch):
    monkeypatch.setenv("L1RECOVER_OUTPUT_DIR", str(tmp_path / "runs"))
    assert main(["audit-erp", "-N", "32", "-K", "16", "--trials", "3"]) == 0
    assert (tmp_path / "runs" / "erp.csv").exists() and (tmp_path / "runs" / "erp.manifest.json").exists()


def test_phase_output_identical_for_any_worker_count(tmp_path):
    args = ["phase", "-N", "48", "-K", "16", "--sparsity", "2..6..2", "--trials", "6", "--seed", "3"]
    assert main(args + ["-o", "a.csv"]) == 0
    assert main(args + ["-o", "b.csv", "--workers", "2"]) == 0
    assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()
    manifest = json.loads((tmp_path / "a.manifest.json").read_text())
    assert manifest["grid"]["trials"] == 6 and manifest["seeds"]["base_seed"] == 3
    assert "wall_time_seconds" in manifest and "numpy" in manifest["versions"]


@pytest.mark.parametrize("argv", [
    ["audit-werp", "-N", "32", "-K", "8", "--support-size", "2", "--trials", "3"],
    ["scaling", "-N", "32", "-K", "8,12,16,24", "--p", "1", "--trials", "2"],
    ["concentration", "--suite", "omega", "-N", "256", "--tau", "0.25", "--trials", "50"],
    ["concentration", "--suite", "singular", "--rows", "20", "--cols", "5", "--trials", "20"],
    ["concentration", "--suite", "xnorm", "--xnorm-N", "16,32", "--trials", "20"],
])
def test_other_commands_run(argv, tmp_path):
    assert main(argv + ["-o", "out.csv"]) == 0
    assert (tmp_path / "out.csv").read_text().splitlines()[0].endswith("statistic,value,stderr")
