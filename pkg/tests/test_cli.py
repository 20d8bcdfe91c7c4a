import json
import math
import subprocess
import sys

import numpy as np
import pytest

from stokesdata.cli import main, parse_system
from stokesdata.liealg import random_offdiagonal

GL3 = '{"eigenvalues": [[0, 0], [1, 0], [0, 1]]}'


def run(capsys, *argv):
    status = main(list(argv))
    return status, capsys.readouterr().out


def test_mlog_eval_single(capsys):
    status, out = run(capsys, "mlog-eval", "--fn", "M", "--tuple", "[[-1, 0], [0, 1]]")
    assert status == 0
    re, im = json.loads(out)["value"]
    assert abs(re + math.pi**2) < 1e-9 and abs(im) < 1e-9


def test_mlog_eval_batch_csv(capsys):
    status, out = run(capsys, "mlog-eval", "--fn", "L", "--tuple", "[[[1, 0]], [[2, 1]]]", "--csv")
    assert status == 0
    lines = out.strip().splitlines()
    assert lines[0] == "tuple,re,im" and len(lines) == 3
    assert abs(float(lines[1].split(",")[-1]) - 2 * math.pi) < 1e-12


def test_trees(capsys):
    assert run(capsys, "trees", "--leaves", "4", "--count") == (0, "11\n")
    status, out = run(capsys, "trees", "--leaves", "3", "--list")
    assert status == 0 and len(out.split()) == 3


def test_zero_element_maps_to_zero(capsys, tmp_path):
    zero = tmp_path / "zero.json"
    zero.write_text(json.dumps({"matrix": [[[0, 0]] * 3] * 3}))
    status, out = run(capsys, "stokes-map", "--system", GL3, "--element", str(zero))
    assert status == 0
    assert json.loads(out)["components"] == []


def test_round_trip_through_files(capsys, tmp_path):
    eps_file = tmp_path / "eps.json"
    assert run(capsys, "stokes-map", "--system", GL3, "--seed", "7", "--output", str(eps_file))[0] == 0
    status, out = run(capsys, "stokes-inverse", "--system", GL3, "--element", str(eps_file))
    assert status == 0
    f_back = json.loads(out)["matrix"]
    # the element stokes-map drew from seed 7
    f = random_offdiagonal(parse_system(json.loads(GL3)), 0.05, np.random.default_rng(7)).matrix()
    back = np.array([[complex(*v) for v in row] for row in f_back])
    assert np.abs(back - f).max() < 1e-8


def test_verify_report(capsys, tmp_path):
    report = tmp_path / "report.json"
    status, out = run(capsys, "verify", "factor", "--system", '{"eigenvalues": [[0, 0], [1, 0]]}', "--report", str(report))
    assert status == 0
    data = json.loads(report.read_text())
    assert data["pass"] and all(c["residual"] <= 1e-6 for c in data["checks"])
    assert json.loads(out) == data


def test_verify_imd(capsys):
    path = json.dumps([[[0, 0], [1, 0], [0, 1]], [[0, 0], [1, 0.1], [0, 1.2]]])
    status, out = run(capsys, "verify", "imd", "--system", GL3, "--ray", "0.1", "--z-path", path)
    assert status == 0 and json.loads(out)["pass"]


@pytest.mark.parametrize(
    "argv",
    [
        ["mlog-eval", "--fn", "M", "--tuple", "[[1, 2, 3]]"],
        ["mlog-eval", "--fn", "Q", "--tuple", "[[1, 0]]"],
        ["mlog-eval", "--fn", "M", "--tuple", "[[1, 0]]", "--tol", "0.5"],
        ["stokes-map", "--system", '{"eigenvalues": []}'],
        ["trees", "--leaves", "40", "--count"],
        ["nonsense"],
    ],
)
def test_schema_errors(capsys, argv):
    status, out = run(capsys, *argv)
    assert status == 2
    assert json.loads(out)["error"]["code"] == "schema"


def test_non_generic_exit(capsys):
    status, out = run(capsys, "stokes-factor", "--system", GL3, "--ray", "0.3")
    assert status == 3
    assert json.loads(out)["error"]["type"] == "InadmissibleRay"


def test_not_converged_exit(capsys):
    status, out = run(capsys, "stokes-map", "--system", GL3, "--random-norm", "3", "--order", "3")
    assert status == 4
    assert json.loads(out)["error"]["type"] == "NotConverged"


def test_console_script_is_deterministic():
    cmd = [sys.executable, "-m", "stokesdata.cli", "multipliers", "--system", GL3, "--ray", "0.1", "--order", "5", "--no-check"]
    first = subprocess.run(cmd, capture_output=True, check=True).stdout
    second = subprocess.run(cmd, capture_output=True, check=True).stdout
    assert first == second and json.loads(first)["kind"] == "kappa"
