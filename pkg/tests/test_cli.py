import json
import math

import pandas as pd
import pytest

from gengauss.cli import main, parse_point, parse_schedule
from gengauss.utils.errors import DomainError


def run_json(capsys, argv):
    assert main(argv) == 0
    return json.loads(capsys.readouterr().out)


def test_rule_writes_lobatto_weights(tmp_path):
    out = tmp_path / "lobatto.json"
    code = main(["rule", "--measure", "jacobi:0,0", "--a", "-1", "--b", "1",
                 "--r", "1", "--s", "1", "--n", "1", "--out", str(out)])
    assert code == 0
    data = json.loads(out.read_text())
    assert data["left_weights"] == pytest.approx([1 / 3])
    assert data["interior_weights"] == pytest.approx([4 / 3])
    assert data["right_weights"] == pytest.approx([1 / 3])
    assert data["degree_exact"] == 3


def test_rule_to_stdout(capsys):
    data = run_json(capsys, ["rule", "--measure", "jacobi:0,0", "--n", "2"])
    assert data["nodes"] == pytest.approx([-1 / math.sqrt(3), 1 / math.sqrt(3)])


def test_rule_csv(capsys):
    assert main(["rule", "--measure", "jacobi:0,0", "--r", "2", "--n", "2", "--csv"]) == 0
    lines = capsys.readouterr().out.strip().splitlines()
    assert lines[0] == "kind,index,abscissa,order,weight"
    assert len(lines) == 5


def test_laguerre_right_derivatives_are_a_domain_error(capsys):
    code = main(["rule", "--measure", "laguerre:0", "--s", "1", "--n", "2"])
    assert code == 2
    assert "error:" in capsys.readouterr().err


def test_unknown_family_suggests(capsys):
    assert main(["rule", "--measure", "jacobo:0,0", "--n", "2"]) == 2
    assert "jacobi" in capsys.readouterr().err


def test_check_sweep_passes(tmp_path):
    out = tmp_path / "checks.csv"
    code = main(["check", "--measure", "jacobi:0.5,-0.5", "--a", "-1", "--b", "1",
                 "--n-max", "3", "--r-max", "2", "--s-max", "2", "--out", str(out)])
    assert code == 0
    table = pd.read_csv(out)
    assert len(table) == 27
    assert table["passed"].all()


def test_check_sample(capsys):
    assert main(["check", "--measure", "jacobi:0,0", "--n-max", "4", "--r-max", "2", "--s-max", "2",
                 "--sample", "5", "--seed", "7", "--json"]) == 0
    assert len(json.loads(capsys.readouterr().out)["rows"]) == 5


def test_empty_sweep(capsys):
    assert main(["check", "--measure", "jacobi:0,0", "--n-max", "0"]) == 0
    lines = capsys.readouterr().out.strip().splitlines()
    assert len(lines) == 1


def test_check_flags_tampered_rule(tmp_path):
    path = tmp_path / "rule.json"
    assert main(["rule", "--measure", "jacobi:0,0", "--a", "-1", "--b", "1",
                 "--r", "1", "--s", "1", "--n", "2", "--out", str(path)]) == 0
    data = json.loads(path.read_text())
    assert main(["check", "--measure", "jacobi:0,0", "--rule", str(path), "--out", str(tmp_path / "ok.csv")]) == 0
    data["interior_weights"] = [-w for w in data["interior_weights"]]
    path.write_text(json.dumps(data))
    assert main(["check", "--measure", "jacobi:0,0", "--rule", str(path), "--out", str(tmp_path / "bad.csv")]) == 1


def test_missing_rule_file_is_io_error(tmp_path):
    assert main(["check", "--measure", "jacobi:0,0", "--rule", str(tmp_path / "absent.json")]) == 4


def test_malformed_rule_file_is_domain_error(tmp_path, capsys):
    path = tmp_path / "broken.json"
    path.write_text('{"a": -1, "r": 1,')
    assert main(["check", "--measure", "jacobi:0,0", "--rule", str(path)]) == 2
    assert "not valid JSON" in capsys.readouterr().err


def test_rejected_parameters_become_failed_rows(tmp_path):
    out = tmp_path / "checks.csv"
    code = main(["check", "--measure", "laguerre:0", "--n-max", "2", "--r-max", "1", "--s-max", "1",
                 "--out", str(out)])
    assert code == 1
    table = pd.read_csv(out)
    assert len(table) == 8
    assert table.loc[table["s"] == 0, "passed"].all()
    rejected = table[table["s"] == 1]
    assert not rejected["passed"].any()
    assert rejected["error"].notna().all()


def test_integrate(capsys):
    data = run_json(capsys, ["integrate", "--measure", "jacobi:0,0", "--a", "-1", "--b", "1",
                             "--r", "1", "--s", "1", "--n", "1", "--f", "t^3"])
    assert data["Q"] == pytest.approx(0.0, abs=1e-15)
    assert "R" not in data
    data = run_json(capsys, ["integrate", "--measure", "jacobi:0,0", "--n", "6", "--f", "exp(t)",
                             f"--exact={math.e - 1 / math.e}"])
    assert abs(data["R"]) < 1e-10


def test_integrate_pole_at_node(capsys):
    assert main(["integrate", "--measure", "jacobi:0,0", "--a", "-1", "--b", "1",
                 "--r", "1", "--s", "1", "--n", "1", "--f", "1/t"]) == 2


@pytest.mark.parametrize("f", ["1/t", "1/(t-0.3)"])
def test_integrate_pole_between_nodes(capsys, f):
    assert main(["integrate", "--measure", "jacobi:0,0", "--n", "2", "--f", f]) == 2
    assert "inside the support" in capsys.readouterr().err


def test_integrate_syntax_error(capsys):
    assert main(["integrate", "--measure", "jacobi:0,0", "--n", "2", "--f", "1/(1+"]) == 2
    assert "offset 5" in capsys.readouterr().err


def test_levelset_writes_payload_and_contours(tmp_path):
    out, contours = tmp_path / "level.json", tmp_path / "contours.csv"
    code = main(["levelset", "--a", "-1", "--alpha", "0", "--b", "1", "--beta", "0", "--rho", "1.5",
                 "--resolution", "128", "128", "--out", str(out), "--contours", str(contours)])
    assert code == 0
    payload = json.loads(out.read_text())
    assert (payload["A"], payload["B"]) == (-1.0, 1.0)
    assert payload["contours"][0]["component_count"] == 1
    frame = pd.read_csv(contours)
    assert list(frame.columns) == ["rho", "component", "x", "y"]
    assert len(frame) > 10


def test_converge_single_schedule(capsys):
    data = run_json(capsys, ["converge", "--measure", "jacobi:0,0", "--f", "1/(t-2)", "--n-max", "14",
                             f"--exact={-math.log(3)}", "--singularity", "2"])
    assert data["saturated"] is False
    assert data["fitted_rate"] == pytest.approx((2 + math.sqrt(3)) ** -2, rel=0.1)
    assert len(data["rows"]) == 14
    assert data["note"] is None


def test_converge_comparison(capsys):
    data = run_json(capsys, ["converge", "--measure", "jacobi:0,0", "--f", "1/(t-2)", "--n-max", "12",
                             "--schedule", "0,0", "--schedule", "0.5,0.5", f"--exact={-math.log(3)}"])
    assert [row["alpha"] for row in data["comparison"]] == pytest.approx([0.5, 0.0])


def test_converge_polynomial_note(capsys):
    data = run_json(capsys, ["converge", "--measure", "jacobi:0,0", "--f", "t^2", "--n-max", "4",
                             "--exact", "0.6666666666666666"])
    assert "polynomial of degree 2" in data["note"]
    assert data["saturated"] is True


def test_spline_csv(capsys):
    assert main(["spline", "--f", "exp(-t)", "--m", "1", "--n", "2", "--samples", "21", "--csv"]) == 0
    lines = capsys.readouterr().out.strip().splitlines()
    assert lines[0] == "t,sigma"
    assert len(lines) == 22


def test_spline_json(capsys):
    data = run_json(capsys, ["spline", "--f", "exp(-t)", "--m", "1", "--n", "2"])
    assert data["moment_order"] == 5
    assert len(data["residuals"]) == 7
    assert all(row["residual"] < 1e-9 for row in data["residuals"][:6])


def test_bad_precision_env(monkeypatch):
    monkeypatch.setenv("GENGAUSS_PRECISION", "quad")
    assert main(["rule", "--measure", "jacobi:0,0", "--n", "2"]) == 2


def test_parse_helpers():
    assert parse_schedule("0.5,1") == (0.5, 1.0)
    assert parse_point("0+1i") == 1j
    assert parse_point(None) is None
    with pytest.raises(DomainError):
        parse_schedule("1")
    with pytest.raises(DomainError):
        parse_schedule("-1,0")
    with pytest.raises(DomainError):
        parse_point("one")
