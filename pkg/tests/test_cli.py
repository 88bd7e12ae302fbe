"""Command-line behavior: subcommands, formats, exit codes."""

import json

import pytest

from nsmetric.analysis import analyze_point
from nsmetric.cli import main
from nsmetric.example import example_model

from conftest import MINKOWSKI_DOC


def run(capsys, *argv):
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


@pytest.fixture
def minkowski_file(tmp_path):
    p = tmp_path / "minkowski.toml"
    p.write_text(MINKOWSKI_DOC, encoding="utf-8")
    return str(p)


def test_analyze_minkowski_all_zero(capsys, minkowski_file):
    code, out, err = run(capsys, "analyze", "--model", minkowski_file,
                         "--point", "0,0,0,0", "--format", "json")
    assert code == 0, err
    report = json.loads(out)
    assert report["connection"]["full_nonzero"] == []
    assert report["torsion"]["lower_nonzero"] == []
    assert report["curvature"]["scalar"] == 0.0
    assert report["curvature"]["riemann_nonzero"] == []
    assert report["matter"]["pressure"] == 0.0
    assert report["diagnostics"]["status"] == "ok"


def test_analyze_builtin_example_nonzero_blocks(capsys):
    code, out, err = run(capsys, "analyze", "--model", "example",
                         "--point", "1,1,1,1", "--format", "json")
    assert code == 0, err
    report = json.loads(out)
    assert report["connection"]["first_kind_nonzero"]
    assert report["torsion"]["lower_nonzero"]
    # closed form: Gamma_{0.00} = s0'/2 = t = 1 for s0 = 1 + t^2
    entries = {tuple(e[:3]): e[3] for e in report["connection"]["first_kind_nonzero"]}
    assert abs(entries[(0, 0, 0)] - 1.0) < 1e-12
    # torsion component T_{012} = -n3'(1) = -1 for n3 = t
    torsion = {tuple(e[:3]): e[3] for e in report["torsion"]["lower_nonzero"]}
    assert abs(torsion[(0, 1, 2)] + 1.0) < 1e-12


def test_analyze_table_format(capsys):
    code, out, err = run(capsys, "analyze", "--model", "example")
    assert code == 0
    assert "-- curvature --" in out
    assert "first_kind_nonzero" in out


def test_json_report_roundtrips_bit_exactly(capsys):
    code, out, _ = run(capsys, "analyze", "--model", "example",
                       "--point", "1.25,1,1,1", "--format", "json")
    assert code == 0
    parsed = json.loads(out)
    direct = analyze_point(example_model(), (1.25, 1, 1, 1))
    assert parsed["curvature"]["scalar"] == direct["curvature"]["scalar"]
    assert parsed["matter"]["emt"] == [[float(v) for v in row]
                                       for row in direct["matter"]["emt"]]
    assert json.loads(json.dumps(parsed)) == parsed


def test_corrupt_file_exit_1(capsys, tmp_path):
    p = tmp_path / "bad.toml"
    p.write_text("[metric\ng = oops", encoding="utf-8")
    code, out, err = run(capsys, "analyze", "--model", str(p))
    assert code == 1
    payload = json.loads(err)
    assert payload["error"]["exit_code"] == 1
    assert payload["error"]["kind"] == "ModelError"


def test_bad_expression_exit_1_with_offset(capsys, tmp_path):
    doc = MINKOWSKI_DOC.replace('"-1"', '"1 +* 1"', 1)
    p = tmp_path / "badexpr.toml"
    p.write_text(doc, encoding="utf-8")
    code, out, err = run(capsys, "analyze", "--model", str(p))
    assert code == 1
    assert "offset" in json.loads(err)["error"]["message"]


def test_singular_model_exit_2(capsys, tmp_path):
    doc = MINKOWSKI_DOC.replace('"1", "0", "0", "0"', '"0", "0", "0", "0"')
    p = tmp_path / "singular.toml"
    p.write_text(doc, encoding="utf-8")
    code, out, err = run(capsys, "analyze", "--model", str(p))
    assert code == 2
    assert json.loads(err)["error"]["kind"] == "SingularMetricError"


def test_missing_model_exit_1(capsys):
    code, out, err = run(capsys, "analyze", "--model", "no-such-file.toml")
    assert code == 1


def test_verify_example_default_passes(capsys):
    code, out, err = run(capsys, "verify-example", "--grid", "0.5:2.0:8")
    assert code == 0, out + err
    assert "[PASS]" in out
    assert "lagrangian_closed_form" in out
    assert "overall: ok" in out


def test_verify_example_strict_fails_on_ledger(capsys):
    code, out, err = run(capsys, "verify-example", "--grid", "0.5:2.0:6",
                         "--strict")
    assert code == 3
    assert "documented" in out


def test_verify_example_singular_point_skipped(capsys):
    code, out, err = run(capsys, "verify-example", "--grid", "0:2:5",
                         "--profile", "t", "1", "1", "1")
    assert code == 0, out + err
    assert "[skipped] t=0.0" in out


def test_verify_example_json(capsys):
    code, out, err = run(capsys, "verify-example", "--grid", "0.5:2.0:6",
                         "--format", "json")
    assert code == 0
    data = json.loads(out)
    assert data["ok"] is True
    assert any(r["quantity"] == "scalar_family_quadratic_pairing"
               for r in data["ledger"])


def test_solve_profile_analytic(capsys):
    code, out, err = run(capsys, "solve-profile", "--target", "3/2",
                         "--coeffs", "0,0,0,-1,0", "--grid", "0:2:9",
                         "--format", "json")
    assert code == 0
    data = json.loads(out)
    n3 = [row[0] for row in data["branch0"]]
    assert abs(n3[-1] - 2.0) < 1e-10
    assert data["branch1"][-1][0] == -n3[-1]
    assert data["roundtrip_residual_max"] < 1e-8


def test_solve_profile_zero_target(capsys):
    code, out, err = run(capsys, "solve-profile", "--target", "0",
                         "--grid", "0:1:5", "--format", "json")
    assert code == 0
    data = json.loads(out)
    assert all(v == 0.0 for row in data["branch0"] for v in row)


def test_solve_profile_negative_radicand_exit_2(capsys):
    code, out, err = run(capsys, "solve-profile", "--target=-3/2",
                         "--coeffs", "0,0,0,-1,0", "--grid", "0:2:9")
    assert code == 2
    payload = json.loads(err)
    assert payload["error"]["kind"] == "RadicandSignError"
    assert "t=" in payload["error"]["message"]


def test_linearity_check(capsys):
    code, out, err = run(capsys, "linearity-check", "--rounds", "5")
    assert code == 0
    assert "ok" in out


def test_bad_point_exit_1(capsys):
    code, out, err = run(capsys, "analyze", "--model", "example",
                         "--point", "1,2,3")
    assert code == 1


def test_analyze_model_with_supplied_torsion(capsys, tmp_path):
    doc = MINKOWSKI_DOC.replace('"-1", "0", "0", "0"', '"-1 - t^2", "0", "0", "0"') \
        .replace("point = [0.0, 0.0, 0.0, 0.0]", "point = [1.0, 0.0, 0.0, 0.0]") \
        + '\n[iz]\nmetricity_mode = "assume_zero"\n"T[0,1,2]" = "0.3 * t"\n'
    p = tmp_path / "iz.toml"
    p.write_text(doc, encoding="utf-8")
    code, out, err = run(capsys, "analyze", "--model", str(p),
                         "--point", "1,0,0,0", "--format", "json")
    assert code == 0, err
    report = json.loads(out)
    assert report["iz"]["metricity_mode"] == "assume_zero"
    assert report["iz"]["eta_nonzero"]
    assert report["iz"]["diagnostics"]["r_route_delta"] < 1e-9


def test_analyze_model_with_matter_terms(capsys, tmp_path):
    doc = MINKOWSKI_DOC + """
[[matter_term]]
label = "a"
alpha = 2.0
L = "1"
V = [["0","0","0","0"],["0","0","0","0"],["0","0","0","0"],["0","0","0","0"]]
"""
    p = tmp_path / "terms.toml"
    p.write_text(doc, encoding="utf-8")
    code, out, err = run(capsys, "analyze", "--model", str(p),
                         "--point", "0,0,0,0", "--format", "json")
    assert code == 0, err
    report = json.loads(out)
    # T = -alpha (V - g L / 2) = alpha g / 2 = g for alpha = 2, L = 1
    assert report["matter_terms"]["emt"][0][0] == 1.0
    assert report["matter_terms"]["density"] == 1.0
