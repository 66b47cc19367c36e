import csv
import io
import json

import pytest

from psos_gibbs.cli import SCAN_COLUMNS, SCHEMA, main
from psos_gibbs.laws import LawPoint, check_point, classify
from psos_gibbs.params import ModelParams


@pytest.fixture(autouse=True)
def _clean_env(monkeypatch):
    monkeypatch.delenv("PSOS_TOL", raising=False)


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def run_json(capsys, *argv):
    code, out, err = run(capsys, *argv)
    assert code == 0, err
    body = json.loads(out)
    assert next(iter(body)) == "schema" and body["schema"] == SCHEMA
    return body


def run_csv(capsys, *argv):
    code, out, err = run(capsys, *argv, "--format", "csv")
    assert code == 0, err
    return list(csv.DictReader(io.StringIO(out)))


def test_solve_unique(capsys):
    body = run_json(capsys, "solve", "--theta", "1.5", "--p", "2", "--format", "json")
    assert body["count"] == 1


def test_solve_symmetric_point(capsys):
    body = run_json(capsys, "solve", "--theta", "1", "--p", "3")
    (pt,) = body["points"]
    assert pt["x"] == 1.0 and pt["y"] == pytest.approx(1.0, rel=1e-15)


def test_solve_round_trip(capsys):
    body = run_json(capsys, "solve", "--theta", "0.15", "--p", "0.1")
    assert body["count"] == 7 == len(body["points"])
    params = ModelParams(body["theta"], body["p"])
    for d in body["points"]:
        pt = LawPoint.from_logs(d["log_x"], d["log_y"], d["branch"], params)
        check_point(pt)
        assert pt.residual < 1e-10
        assert pt.x == pytest.approx(d["x"], rel=1e-15)


def test_solve_csv(capsys):
    rows = run_csv(capsys, "solve", "--theta", "0.15", "--p", "0.1")
    assert [int(r["branch"]) for r in rows] == list(range(1, 8))
    assert all(r["region"] == "Q_PLUS" for r in rows)


def test_domain_error_exit_code(capsys):
    code, _, err = run(capsys, "solve", "--theta", "-1", "--p", "2")
    assert code == 2 and "error" in err
    assert run(capsys, "verify-gamma", "--theta", "1.2", "--p", "2")[0] == 2
    assert run(capsys, "solve", "--theta", "0.5", "--p", "1", "--tol", "0")[0] == 2


def test_branch_absent_exit_code(capsys):
    assert run(capsys, "extremality", "--theta", "1.5", "--p", "2", "--branch", "2")[0] == 3
    assert run(capsys, "kernel", "--theta", "1.5", "--p", "2", "--branch", "6")[0] == 3


def test_unwritable_output(capsys, tmp_path):
    target = tmp_path / "missing" / "scan.csv"
    code = main(["scan", "--p", "0.1", "--range", "0", "1", "--n", "3", "--out", str(target)])
    assert code == 4


def test_bad_tol_env(capsys, monkeypatch):
    monkeypatch.setenv("PSOS_TOL", "abc")
    assert run(capsys, "solve", "--theta", "0.5", "--p", "1")[0] == 2


@pytest.mark.parametrize("theta,p,branch,verdict", [
    ("0.5", "10", "1", "MSW_EXTREMAL"),
    ("0.1", "10", "2", "KS_NONEXTREMAL"),
    ("1.0", "4", "1", "UNDETERMINED"),
])
def test_extremality_verdicts(capsys, theta, p, branch, verdict):
    body = run_json(capsys, "extremality", "--theta", theta, "--p", p, "--branch", branch)
    assert body["verdict"] == verdict
    if theta == "1.0":
        assert body["kappa"] == pytest.approx(0.0, abs=1e-15)
        assert body["eta"] == pytest.approx(-1.0)


def test_extend_bound_flag(capsys):
    body = run_json(capsys, "extremality", "--theta", "5", "--p", "0.1", "--extend-bound")
    assert body["verdict"] == "MSW_EXTREMAL"


def test_kernel_output(capsys):
    body = run_json(capsys, "kernel", "--theta", "0.5", "--p", "1")
    assert len(body["P"]) == 3 and all(sum(r) == pytest.approx(1.0) for r in body["P"])
    rows = run_csv(capsys, "kernel", "--theta", "0.5", "--p", "1")
    assert {"P00", "P22", "lambda1", "lambda2"} <= set(rows[0])


def test_classify_output(capsys):
    body = run_json(capsys, "classify", "--theta", "0.15", "--p", "0.1")
    assert body["region"] == "Q_PLUS" and body["count"] == 7
    rows = run_csv(capsys, "classify", "--theta", "0.8", "--p", "5")
    assert rows[0]["region"] == "UNIQUE" and rows[0]["violations"].startswith("C1")


def test_scan_rows_and_order(capsys):
    rows = run_csv(capsys, "scan", "--p", "0.1", "--range", "0", "1", "--n", "40")
    assert list(rows[0]) == list(SCAN_COLUMNS)
    keys = [(float(r["theta"]), int(r["branch"])) for r in rows]
    assert keys == sorted(keys)
    thetas = sorted({k[0] for k in keys})
    assert len(thetas) == 40
    expected = sum(classify(ModelParams(t, 0.1), ambiguity="snap").count for t in thetas)
    assert len(rows) == expected
    assert all(r["exists"] == "true" for r in rows)


def test_scan_all_branches(capsys):
    rows = run_csv(capsys, "scan", "--p", "0.1", "--range", "0.5", "1", "--n", "5", "--all-branches")
    assert len(rows) == 35
    absent = [r for r in rows if r["exists"] == "false"]
    assert absent and all(r["x"] == "" and r["eta"] == "" for r in absent)


def test_scan_eta_sign_change_on_smallest_root(capsys):
    rows = run_csv(capsys, "scan", "--p", "0.1", "--range", "0", "1", "--n", "400")
    eta = [(float(r["theta"]), float(r["eta"])) for r in rows if r["branch"] == "3"]
    flips = [a[0] for a, b in zip(eta, eta[1:]) if a[1] * b[1] < 0]
    assert len(flips) == 1 and abs(flips[0] - 0.175) < 0.005


def test_scan_u_negative_at_p10(capsys):
    rows = run_csv(capsys, "scan", "--p", "10", "--range", "0", "1", "--n", "100")
    u1 = [float(r["U"]) for r in rows if r["branch"] == "1"]
    assert len(u1) == 100 and max(u1) < 0


def test_scan_deterministic(tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    for f in (a, b):
        assert main(["scan", "--p", "0.1", "--range", "0", "2", "--n", "30", "--out", str(f)]) == 0
    assert a.read_bytes() == b.read_bytes()


def test_thresholds_reports_undefined_inline(capsys):
    body = run_json(capsys, "thresholds", "--p", "10")
    names = {t["name"]: t for t in body["thresholds"]}
    assert names["theta_2_prime"]["theta"] == pytest.approx(0.136, rel=0.02)
    assert names["theta_hat_2"]["theta"] is None and "NotDefined" in names["theta_hat_2"]["error"]
    rows = run_csv(capsys, "thresholds", "--p", "10")
    assert len(rows) == len(names)


def test_curve_output(capsys):
    rows = run_csv(capsys, "curve", "--name", "M_BIG", "--range", "0.3", "0.9", "--n", "7")
    assert len(rows) == 7 and rows[0]["p"] == ""
    body = run_json(capsys, "curve", "--name", "M_SMALL", "--range", "0.25", "0.3", "--n", "3", "--format", "json")
    assert len(body["points"]) == 3


def test_verify_gamma(capsys):
    body = run_json(capsys, "verify-gamma", "--theta", "0.5", "--p", "1", "--grid", "50")
    assert body["holds"] and body["max_abs"] <= body["bound"] + 1e-9
    rows = run_csv(capsys, "verify-gamma", "--theta", "0.5", "--p", "1", "--grid", "20")
    assert "max_f" in rows[0]


def test_json_has_no_nan(capsys):
    _, out, _ = run(capsys, "scan", "--p", "0.1", "--range", "0.5", "1", "--n", "3",
                    "--all-branches", "--format", "json")
    assert "NaN" not in out and "Infinity" not in out
    json.loads(out)
