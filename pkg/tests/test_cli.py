import json
import subprocess
import sys

import pytest

from lobachevsky_ho import cli, spheroidal_ode


def run(argv, capsys):
    code = cli.main(argv)
    out = capsys.readouterr()
    return code, out.out, out.err


def data_lines(text):
    return [ln for ln in text.splitlines() if ln and not ln.startswith("#")]


def test_spectrum_json(capsys):
    code, out, _ = run(["spectrum", "--q", "0.5", "--n-max", "2", "--format", "json"], capsys)
    assert code == 0
    doc = json.loads(out)
    assert len(doc["records"]) == 3
    for r in doc["records"]:
        assert r["lambda"] == -r["E_tilde"] - 0.25
    assert doc["metadata"]["version"] and doc["metadata"]["tolerances"]["rtol"] == 1e-10


def test_spectrum_matches_golden(capsys, golden):
    _, doc = golden
    _, out, _ = run(["spectrum", "--q", "0.5", "--format", "json"], capsys)
    for r, g in zip(json.loads(out)["records"], doc["values"]):
        assert abs(r["E_tilde"] - g["E_tilde"]) <= r["err"] + g["err"]


def test_routes_identical(capsys):
    _, a, _ = run(["spectrum", "--a2", "10", "--omega", "1", "--n-max", "2"], capsys)
    _, b, _ = run(["spectrum", "--q", "5", "--n-max", "2"], capsys)
    assert a == b


def test_deterministic(capsys):
    _, a, _ = run(["spectrum", "--q", "2", "--format", "json"], capsys)
    _, b, _ = run(["spectrum", "--q", "2", "--format", "json"], capsys)
    assert a == b


def test_floats_round_trip(capsys):
    _, out, _ = run(["spectrum", "--q", "0.5"], capsys)
    row = data_lines(out)[1].split(",")
    assert all(repr(float(x)) == x for x in row[1:])


def test_sweep_csv(capsys):
    code, out, _ = run(["sweep", "--q-values", "5", "10", "20", "50"], capsys)
    assert code == 0
    lines = data_lines(out)
    assert lines[0] == "q,n,E_tilde,E_over_omega"
    rows = [ln.split(",") for ln in lines[1:]]
    assert len(rows) == 12
    n0 = [float(r[3]) for r in rows if r[1] == "0"]
    assert all(b < a for a, b in zip(n0, n0[1:]))


def test_sweep_incomplete(capsys, caplog, monkeypatch):
    from lobachevsky_ho import eigensolver
    from lobachevsky_ho.errors import SpectralConsistencyError
    real = eigensolver.eigenvalues

    def flaky(p, *a, **k):
        if p.q == 1.0:
            raise SpectralConsistencyError("injected")
        return real(p, *a, **k)

    monkeypatch.setattr(eigensolver, "eigenvalues", flaky)
    code, out, err = run(["sweep", "--q-values", "0.5", "1", "2"], capsys)
    assert code == 2
    assert out.rstrip().splitlines()[-1] == "# incomplete"
    assert len(data_lines(out)) == 1 + 6
    assert "injected" in caplog.text


def test_flat_eigenfunction_value(capsys):
    _, out, _ = run(["eigenfunction", "--flat", "--n", "0", "--rho-max", "8", "--samples", "801"], capsys)
    rows = [ln.split(",") for ln in data_lines(out)[1:]]
    assert float(rows[0][1]) == 0.0
    rho1 = [r for r in rows if float(r[0]) == 1.0][0]
    assert float(rho1[1]) == pytest.approx(0.778800783, abs=1e-9)
    _, alias, _ = run(["flat", "--n", "0", "--rho-max", "8", "--samples", "801"], capsys)
    assert data_lines(alias) == data_lines(out)


def test_eigenfunction_sidecar(tmp_path, capsys):
    out = tmp_path / "psi.csv"
    assert cli.main(["eigenfunction", "--a2", "1", "--n", "1", "--out", str(out)]) == 0
    meta = json.loads((tmp_path / "psi.csv.json").read_text())
    assert meta["n"] == 1 and meta["params"]["a2"] == 1.0
    assert out.read_text().splitlines()[0] == "rho,psi"


def test_figure_preset_writes_nine_curves(tmp_path):
    assert cli.main(["eigenfunction", "--paper-figures", "--out", str(tmp_path)]) == 0
    assert len(list(tmp_path.glob("*.csv"))) == 9
    assert len(list(tmp_path.glob("*.csv.json"))) == 9


def test_golden_refuses_without_force(tmp_path, capsys, caplog):
    target = tmp_path / "g.json"
    target.write_text("{}")
    code, _, err = run(["golden", "--q", "0.5", "--grid-n", "4096", "--out", str(target)], capsys)
    assert code == 1 and "--force" in caplog.text
    assert target.read_text() == "{}"
    code, _, _ = run(["golden", "--q", "0.5", "--grid-n", "4096", "--out", str(target), "--force"], capsys)
    doc = json.loads(target.read_text())
    assert code == 0 and doc["method"]["N"] == 4096 and "Xi" in doc["method"]


@pytest.mark.parametrize("argv", [
    ["spectrum"],
    ["spectrum", "--q", "-1"],
    ["spectrum", "--q", "1", "--m", "1"],
    ["spectrum", "--q", "1", "--tol", "0"],
    ["spectrum", "--q", "1", "--a2", "2"],
    ["nonsense"],
])
def test_usage_errors(argv, capsys):
    try:
        code = cli.main(argv)
    except SystemExit as exc:  # argparse-level errors
        code = exc.code
    assert code == 1


def test_argparse_exit_code():
    proc = subprocess.run([sys.executable, "-m", "lobachevsky_ho.cli", "spectrum", "--q", "1", "--a2", "2"],
                          capture_output=True, text=True)
    assert proc.returncode == 1 and proc.stdout == ""


def test_oracle_only_nonzero_m(capsys):
    code, out, _ = run(["spectrum", "--q", "0.5", "--m", "1", "--oracle-only", "--grid-n", "4096",
                        "--format", "json"], capsys)
    assert code == 0
    doc = json.loads(out)
    assert doc["metadata"]["quality"] == "qualitative"


def test_verify_passes(capsys):
    code, out, _ = run(["verify"], capsys)
    doc = json.loads(out)
    assert code == 0 and doc["passed"]
    names = [c["name"] for c in doc["checks"]]
    assert len(names) == len(set(names))
    assert {"oracle_agreement", "ode_residual", "monotonicity", "flat_limit",
            "orthonormality", "concentration_ordering"} <= set(names)


def test_verify_catches_lambda_sign_bug(capsys):
    code, out, _ = run(["verify", "--inject-lambda-sign-bug"], capsys)
    doc = json.loads(out)
    assert code == 3
    assert not {c["name"]: c for c in doc["checks"]}["ode_residual"]["passed"]
    assert spheroidal_ode._LAMBDA_SIGN == 1.0
