import json
import math

import pytest

from torsionlab.cli import main

DISK = {"dimension": 2, "kind": "disk", "c0": 1, "nodes": 256}


def run(tmp_path, *argv, name="out.json"):
    out = tmp_path / name
    code = main([*argv, "--out", str(out)])
    text = out.read_text() if out.exists() else None
    return code, (json.loads(text) if text and name.endswith(".json") else text)


def body_file(tmp_path, spec, name="b.json"):
    p = tmp_path / name
    p.write_text(json.dumps(spec))
    return str(p)


def test_body_validate_disk(tmp_path):
    code, out = run(tmp_path, "body", "validate", body_file(tmp_path, DISK))
    assert code == 0
    diag = out["reports"][0]["diagnostics"]
    assert diag["valid"] and diag["area"] == pytest.approx(math.pi)
    assert out["summary"] == {"passed": 1, "equality": 0, "violated": 0, "errors": 0}


def test_body_validate_not_convex(tmp_path):
    spec = {"dimension": 2, "kind": "trig", "c0": 1, "cos": [0, 0.9], "sin": [], "nodes": 256}
    code, out = run(tmp_path, "body", "show", body_file(tmp_path, spec))
    assert code == 1
    diag = out["reports"][0]["diagnostics"]
    assert not diag["valid"] and diag["theta_min_w"] == pytest.approx(0.0, abs=1e-12)


@pytest.mark.parametrize("spec", [{"dimension": 2, "kind": "blob", "nodes": 256},
                                  dict(DISK, nodes=255)])
def test_body_parse_errors(tmp_path, spec):
    assert main(["body", "validate", body_file(tmp_path, spec)]) == 2


def test_missing_body_file():
    assert main(["torsion", "/nonexistent/body.json"]) == 2


def test_torsion_ladder_on_disk(tmp_path):
    code, out = run(tmp_path, "torsion", "disk", "--ladder", "1/32,1/64,1/128")
    assert code == 0
    lad = out["reports"][0]["diagnostics"]["ladder"]
    assert lad["delta"] == [1 / 32, 1 / 64, 1 / 128]
    # the disk torsion function is quadratic and reproduced exactly: errors sit at round-off
    assert lad["at_roundoff_floor"]
    assert max(lad["errors"]) <= 1e-10 * math.pi


def test_torsion_ellipse(tmp_path):
    code, out = run(tmp_path, "torsion", "--body", "ellipse:2,1")
    rep = out["reports"][0]
    assert code == 0 and rep["verdict"] == "equality"
    assert rep["lhs"] == pytest.approx(8 * math.pi / 5, rel=5e-3)
    assert rep["diagnostics"]["gradmag_max"] == pytest.approx(1.6, rel=2e-2)


def test_needle_rejected(monkeypatch):
    import torsionlab.poisson as P
    monkeypatch.setattr(P, "MAX_ASPECT", 1.5)
    assert main(["torsion", "ellipse:2,1", "--grid", "1/32"]) == 2


def test_bad_ladder():
    assert main(["torsion", "disk", "--ladder", "1/64,1/32"]) == 2


def test_verify_poincare_disk(tmp_path):
    code, out = run(tmp_path, "verify", "poincare", "--body", "disk", "--psi", "translation:x")
    assert code == 0 and out["reports"][0]["verdict"] == "equality"


def test_verify_bm_random_pairs(tmp_path):
    code, out = run(tmp_path, "verify", "--grid", "1/32", "bm", "--random-pairs", "2",
                    "--seed", "7", "--samples", "5")
    assert code == 0
    assert out["config"]["delta"] == 1 / 32 and out["config"]["seed"] == 7
    assert len(out["reports"]) == 4 and out["summary"]["violated"] == 0


def test_verify_variation_breakdown(tmp_path):
    code, out = run(tmp_path, "verify", "variation", "--body", "random:3", "--phi", "dilation",
                    "--order", "2", "--grid", "1/64")
    rep = out["reports"][0]
    assert code == 0 and rep["verdict"] == "equality"
    assert set(rep["diagnostics"]["breakdown"]) >= {"term_curv", "term_udot", "term_four", "term_grad"}
    assert abs(rep["gap"]) <= 0.05 * abs(rep["rhs"])


def test_violation_sets_exit_code(tmp_path):
    tol = tmp_path / "tol.json"
    tol.write_text(json.dumps({"second_variation": {"violation": 1e-12, "equality": 1e-12}}))
    code, out = run(tmp_path, "verify", "variation", "--body", "random:3", "--phi", "random:1:3",
                    "--grid", "1/32", "--tol-file", str(tol))
    assert code == 1 and out["summary"]["violated"] == 1


def test_bad_tolerance_file(tmp_path):
    tol = tmp_path / "tol.json"
    tol.write_text(json.dumps({"poincare": {"violation": -1}}))
    assert main(["oracle", "ellipsoid", "--axes", "1,1,1", "--tol-file", str(tol)]) == 2


@pytest.mark.parametrize("axes,check", [("1,1,1", "theorem"), ("1.5,1,0.75", "theorem"),
                                        ("2,1", "torsion"), ("2,1,1", "homothety"),
                                        ("1.5,1,0.75", "hessian")])
def test_oracle(tmp_path, axes, check):
    code, out = run(tmp_path, "oracle", "ellipsoid", "--axes", axes, "--check", check)
    assert code == 0 and out["reports"][0]["verdict"] == "equality"
    if check == "torsion":
        assert out["reports"][0]["lhs"] == pytest.approx(8 * math.pi / 5)


def test_other_verifiers(tmp_path):
    for argv in (["verify", "adjoint", "--body", "random:2", "--phi1", "random:1:3",
                  "--phi2", "trig:k=2,a=0.3"],
                 ["verify", "hessian", "--body", "random:2", "--stations", "8"],
                 ["verify", "concavity", "--body", "random:2", "--phi", "translation:y",
                  "--samples", "3"],
                 ["verify", "poincare", "--body", "random:2", "--random-psi", "2",
                  "--form", "spherical"]):
        code, out = run(tmp_path, *argv, "--grid", "1/32")
        assert code == 0, argv
        assert out["summary"]["violated"] == 0


def test_deterministic_reports(tmp_path):
    argv = ["verify", "poincare", "--body", "random:4", "--random-psi", "2", "--seed", "3",
            "--grid", "1/32"]
    _, a = run(tmp_path, *argv, name="a.json")
    _, b = run(tmp_path, *argv, name="b.json")
    for rep in a["reports"] + b["reports"]:
        rep.pop("timing_ms")
    a.pop("timing_ms"), b.pop("timing_ms")
    a["config"].pop("out"), b["config"].pop("out")
    a["config"].pop("argv"), b["config"].pop("argv")
    assert a == b


def test_csv_output(tmp_path):
    code, text = run(tmp_path, "oracle", "ellipsoid", "--axes", "2,1", "--format", "csv",
                     name="out.csv")
    assert code == 0
    header, row = text.strip().splitlines()
    assert header.split(",")[:7] == ["check", "lhs", "rhs", "gap", "tol", "equality_tol", "verdict"]
    assert row.startswith("oracle_torsion,")


def test_stdout_when_no_out(capsys):
    assert main(["oracle", "ellipsoid", "--axes", "1,1,1", "--check", "homothety"]) == 0
    assert json.loads(capsys.readouterr().out)["summary"]["equality"] == 1
