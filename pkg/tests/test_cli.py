import json
import shutil
import subprocess
import sys
from pathlib import Path

import pytest

from kreinapprox.cli import main

CORPUS = Path(__file__).parent / "corpus"
EXPECTED = json.loads((CORPUS / "expected.json").read_text())


@pytest.mark.parametrize("name", ["solved_ilsq_point.json", "nosol_schur_not_weakly_complementable.json",
                                  "invalid_rho_zero.json"])
def test_exit_codes(name, capsys):
    code = main(["run", str(CORPUS / name)])
    out = json.loads(capsys.readouterr().out)
    assert code == EXPECTED[name]["exit"]
    assert out["status"] == EXPECTED[name]["status"]


def test_json_out_and_diagnostics(tmp_path, capsys):
    dest = tmp_path / "r.json"
    code = main(["run", str(CORPUS / "nosol_spline_negative_kernel.json"), "--json-out", str(dest)])
    cap = capsys.readouterr()
    assert code == 2
    assert cap.out == ""
    assert "NotNonnegative" in cap.err
    assert json.loads(dest.read_text())["reason"] == "NotNonnegative"


def test_flags_are_echoed(capsys):
    main(["run", str(CORPUS / "solved_spline_point.json"), "--tol", "1e-9", "--psd-tol", "1e-9",
          "--seed", "5", "--samples", "50", "--strict"])
    out = json.loads(capsys.readouterr().out)
    assert out["tolerances"]["residual_tol"] == 1e-9
    assert out["tolerances"]["psd_tol"] == 1e-9
    assert out["certificates"]["oracle"]["n_samples"] == 50
    assert out["seed"] == 5


def test_type_override(capsys):
    code = main(["schur", str(CORPUS / "solved_ilsq_point.json")])
    out = json.loads(capsys.readouterr().out)
    assert code == 3 and out["status"] == "invalid_input"


def test_file_xor_batch(capsys):
    assert main(["run"]) == 3


def test_batch(tmp_path, capsys):
    for name in ("solved_schur.json", "nosol_smoothing_cancellation.json"):
        shutil.copy(CORPUS / name, tmp_path / name)
    code = main(["run", "--batch", str(tmp_path), "--workers", "2"])
    out = json.loads(capsys.readouterr().out)
    assert code == 2
    assert out["solved_schur.json"]["status"] == "solved"
    assert out["nosol_smoothing_cancellation.json"]["reason"] == "Inconsistent"


def test_console_script_runs_as_module():
    proc = subprocess.run([sys.executable, "-m", "kreinapprox.cli", "run",
                           str(CORPUS / "invalid_malformed.json")], capture_output=True, text=True)
    assert proc.returncode == 3
    assert json.loads(proc.stdout)["error"]["path"] == "$"
