import csv
import io
import json
import subprocess
import sys

import numpy as np
import pytest

from wpa import TruncatedGaussian, evolve, evolve_closed_form
from wpa.cli import EXIT_CONFIG, EXIT_NUMERIC, EXIT_OK, main


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def parse_csv(text):
    lines = text.splitlines()
    assert lines[0].startswith("# ")
    header = json.loads(lines[0][2:])
    rows = list(csv.reader(io.StringIO("\n".join(lines[1:]))))
    return header, rows[0], rows[1:]


def test_density_single_row_matches_library(capsys):
    code, out, _ = run(capsys, "density", "--tmin", "7.5", "--tmax", "7.5", "--x", "0.3")
    assert code == EXIT_OK
    header, cols, rows = parse_csv(out)
    assert cols == ["t", "rho"]
    assert len(rows) == 1
    direct = np.abs(evolve(TruncatedGaussian(), 0.3, np.array([7.5]))) ** 2
    assert float(rows[0][0]) == 7.5
    assert float(rows[0][1]) == direct[0]
    assert float(rows[0][1]) == pytest.approx(abs(evolve_closed_form(TruncatedGaussian(), 0.3, 7.5)) ** 2, rel=1e-15)
    assert header["config"]["state"]["alpha"] == 0.5


def test_output_is_deterministic(capsys, tmp_path):
    argv = ["density", "--tmin", "1", "--tmax", "100", "--per-decade", "4", "--route", "quadrature"]
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    assert main(argv + ["--out", str(a)]) == EXIT_OK
    assert main(argv + ["--out", str(b)]) == EXIT_OK
    assert a.read_bytes() == b.read_bytes()


def test_density_both_routes(capsys):
    code, out, _ = run(capsys, "density", "--route", "both", "--tmin", "0.1", "--tmax", "1000", "--per-decade", "4")
    header, cols, rows = parse_csv(out)
    assert code == EXIT_OK
    assert cols == ["t", "rho_closed_form", "rho_quadrature"]
    assert header["summary"]["max_deviation"] <= 1e-8


def test_state_flags_and_text(capsys):
    code, out, _ = run(capsys, "density", "--state", "state=linear_gaussian beta=2", "--tmin", "1", "--tmax", "1")
    assert code == EXIT_OK
    assert parse_csv(out)[0]["config"]["state"] == {"state": "linear_gaussian", "beta": 2.0}
    code, out, _ = run(capsys, "density", "--state", "truncated_gaussian", "--delta", "2", "--tmin", "1", "--tmax", "1")
    assert parse_csv(out)[0]["config"]["state"]["delta"] == 2.0


def test_figure1(capsys):
    code, out, _ = run(capsys, "figure1")
    assert code == EXIT_OK
    header, cols, rows = parse_csv(out)
    assert cols == ["ln_t", "truncated_gaussian", "gaussian"]
    assert abs(float(rows[-1][1]) + 3) <= 0.05
    assert abs(float(rows[-1][2]) + 1) <= 0.05
    assert abs(header["summary"]["truncated_gaussian"]["tail_slope"] + 3) <= 0.05


def test_exponent_lorentzian(capsys):
    code, out, _ = run(capsys, "exponent", "--state", "lorentzian_squared", "--tmin", "1", "--tmax", "1e6")
    assert code == EXIT_OK
    header, cols, _ = parse_csv(out)
    assert header["config"]["route"] == "quadrature"
    assert abs(header["summary"]["asymptotic_exponent"] + 2) <= 0.05


def test_exponent_json(capsys):
    code, out, _ = run(capsys, "exponent", "--state", "linear_gaussian", "--tmin", "1", "--tmax", "1e4", "--format", "json")
    body = json.loads(out)
    assert code == EXIT_OK
    assert body["columns"] == ["ln_t", "dlnrho_dlnt"]
    assert abs(body["summary"]["asymptotic_exponent"] + 2) <= 1e-5


def test_dwell_divergent_exits_zero(capsys):
    code, out, _ = run(capsys, "dwell", "--state", "gaussian")
    assert code == EXIT_OK
    report = json.loads(out)["report"]
    assert report["time_route"] == "divergent"
    assert report["momentum_route"] == "divergent"
    assert report["relative_discrepancy"] is None


def test_dwell_csv(capsys):
    code, out, _ = run(capsys, "dwell", "--format", "csv")
    assert code == EXIT_OK
    _, cols, rows = parse_csv(out)
    values = dict(rows)
    assert cols == ["quantity", "value"]
    assert float(values["relative_discrepancy"]) <= 1e-3


def test_wtest(capsys):
    code, out, _ = run(capsys, "wtest", "--points", "200")
    header, cols, rows = parse_csv(out)
    assert code == EXIT_OK
    assert len(rows) == 800
    assert all(v <= 1e-12 for v in header["summary"].values())


@pytest.mark.parametrize(
    "argv",
    [
        ["density", "--state", "nonsense"],
        ["density", "--tmin", "10", "--tmax", "1"],
        ["density", "--per-decade", "2"],
        ["density", "--alpha", "-1"],
        ["dwell", "--a", "1", "--b", "-1"],
        ["exponent", "--tmin", "1", "--tmax", "10"],
        ["wtest", "--points", "0"],
        ["density", "--bogus"],
        [],
    ],
)
def test_configuration_errors_exit_2(capsys, argv):
    code, _, err = run(capsys, *argv)
    assert code == EXIT_CONFIG
    assert "error" in json.loads(err.splitlines()[-1])


def test_bad_tolerance_env(capsys, monkeypatch):
    monkeypatch.setenv("WPA_TOL", "5")
    code, _, err = run(capsys, "density", "--tmin", "1", "--tmax", "1")
    assert code == EXIT_CONFIG
    assert "WPA_TOL" in err


def test_tolerance_env_recorded(capsys, monkeypatch):
    monkeypatch.setenv("WPA_TOL", "1e-6")
    _, out, _ = run(capsys, "density", "--tmin", "1", "--tmax", "1")
    assert parse_csv(out)[0]["config"]["rel_tol"] == 1e-6


def test_numerical_failure_exits_3(capsys):
    # far from the packet the density underflows to zero on the whole grid
    code, _, err = run(capsys, "exponent", "--state", "gaussian", "--x", "1000", "--tmin", "0.1", "--tmax", "1e3")
    assert code == EXIT_NUMERIC
    assert json.loads(err)["error"] == "DegenerateInputError"


def test_module_entry_point(tmp_path):
    out = tmp_path / "w.csv"
    proc = subprocess.run(
        [sys.executable, "-m", "wpa", "wtest", "--points", "10", "--out", str(out)], capture_output=True, text=True
    )
    assert proc.returncode == 0
    assert out.read_text().startswith("# ")
