import json
import subprocess
import sys

import numpy as np
import pytest

from ilmlab.cli import main
from ilmlab.codes import Code
from ilmlab.model import ModelParams
from ilmlab.solver import solve_code
from ilmlab.spectrum import analyze_profile


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_roots(capsys):
    code, out, _ = run(capsys, "roots", "--p", "3", "--q", "5", "--gamma", "0.2")
    data = json.loads(out)
    assert code == 0 and data["schema"] == "ilm/1"
    assert data["a"] == pytest.approx(np.sqrt((5 - np.sqrt(5)) / 2), abs=1e-10)
    assert data["A"] == pytest.approx(np.sqrt((5 + np.sqrt(5)) / 2), abs=1e-10)


@pytest.mark.parametrize(
    "argv,status",
    [
        (("roots", "--p", "2", "--q", "3", "--gamma", "0.3"), 2),
        (("roots", "--p", "3", "--q", "4", "--gamma", "0"), 1),
        (("roots", "--bogus"), 1),
        ((), 1),
        (("spectrum", "--p", "3", "--q", "4", "--gamma", "0.2", "--code", "x+"), 1),
        (("solve", "--p", "3", "--q", "4", "--gamma", "0.2", "--eps", "0.9", "--code", "A+,A-"), 3),
    ],
)
def test_exit_codes(capsys, argv, status):
    code, _, err = run(capsys, *argv)
    assert code == status and err


def test_codes_count(capsys):
    code, out, _ = run(capsys, "codes", "--n", "2", "--count-only")
    assert code == 0 and int(out) == 6


def test_truncated_spectrum(capsys):
    code, out, _ = run(capsys, "spectrum", "--p", "3", "--q", "4", "--gamma", "0.2", "--code", "a+,a-", "--truncated")
    data = json.loads(out)
    assert data["verdict"] == "Stable"
    assert data["counts"]["N_i_minus"] == 1
    assert sorted(data["krein"]) == [-1, 0]


def test_scan_row(capsys):
    code, out, _ = run(capsys, "scan", "--p", "3", "--q", "4", "--delta", "0.6", "--n", "4")
    (row,) = json.loads(out)["rows"]
    assert code == 0 and len(row["stable"]) == 5 and row["total_checked"] == 72


def test_profile_round_trip(capsys, tmp_path):
    path = tmp_path / "prof.json"
    base = ("--p", "3", "--q", "4", "--gamma", "0.2", "--eps", "0.01")
    assert run(capsys, "solve", *base, "--code", "A+,a-", "--out", str(path))[0] == 0
    code, out, _ = run(capsys, "spectrum", *base, "--profile-file", str(path))
    assert code == 0
    data = json.loads(out)
    prm = ModelParams(3, 4, 0.2, 0.01)
    rep = analyze_profile(solve_code(Code.parse("A+,a-"), prm), prm)
    lam = np.array(data["eigenvalues"])
    assert np.array_equal(lam[:, 0], rep.eigenvalues.real)
    assert np.array_equal(lam[:, 1], rep.eigenvalues.imag)
    assert data["verdict"] == rep.verdict.value


def test_config_file(capsys, tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# defaults\nn = 3\ncount_only = true\n")
    code, out, _ = run(capsys, "--config", str(cfg), "codes")
    assert code == 0 and int(out) == 20
    code, out, _ = run(capsys, "--config", str(cfg), "codes", "--n", "1")
    assert int(out) == 2
    cfg.write_text("colour = blue\n")
    code, _, err = run(capsys, "--config", str(cfg), "codes")
    assert code == 1 and "colour" in err


def test_dump_config(capsys):
    code, out, _ = run(capsys, "--dump-config", "evolve")
    assert code == 0
    keys = {line.split(" = ")[0] for line in out.splitlines()}
    assert {"t_max", "dt", "perturb", "code", "eps", "p", "q"} <= keys


def test_csv_outputs(capsys):
    code, out, _ = run(capsys, "--format", "csv", "scan", "--p", "2", "--q", "3", "--delta", "0.5", "--n", "2")
    assert out.splitlines()[0] == "N,delta,code,verdict" and len(out.splitlines()) == 7
    code, out, _ = run(
        capsys, "--format", "csv", "evolve", "--p", "3", "--q", "4", "--gamma", "0.2", "--eps", "0.01",
        "--code", "A+", "--t-max", "1", "--dt", "0.01", "--record-every", "50",
    )
    assert out.splitlines()[0] == "t,Q,H,deviation" and len(out.splitlines()) == 4
    code, out, _ = run(capsys, "--format", "csv", "branch", "--p", "3", "--q", "4", "--gamma", "0.2", "--code", "A+", "--eps-max", "0.005")
    assert out.splitlines()[0] == "eps,Q,H,verdict,jac_min_sv"


def test_deterministic_with_seed():
    argv = [sys.executable, "-m", "ilmlab", "--seed", "7", "--format", "csv", "evolve", "--p", "3", "--q", "4",
            "--gamma", "0.2", "--eps", "0.01", "--code", "A+,A-", "--t-max", "2", "--dt", "0.01", "--record-every", "20"]
    a = subprocess.run(argv, capture_output=True, check=True).stdout
    b = subprocess.run(argv, capture_output=True, check=True).stdout
    assert a == b and a
