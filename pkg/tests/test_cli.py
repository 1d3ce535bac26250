import csv
import json
import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest

from lightlike import cli
from lightlike.gauge import GaugeParams
from lightlike.jet_model import random_jet, save_jet

DATA = Path(__file__).parent / "data"


def run(capsys, *argv):
    code = cli.main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


# -- analyze ------------------------------------------------------------------------


def test_analyze_cone_fixture(capsys):
    code, out, _ = run(capsys, "analyze", DATA / "cone_n4.json")
    assert code == cli.EXIT_OK
    rep = json.loads(out)["reports"][0]
    assert rep["classification"] == "umbilical"
    assert rep["foci"]["multiplicities"] == [2]


def test_analyze_diag_fixture(capsys):
    code, out, _ = run(capsys, "analyze", "-i", DATA / "diag124.json")
    assert code == cli.EXIT_OK
    rep = json.loads(out)["reports"][0]
    np.testing.assert_allclose(rep["foci"]["s"], [1.0, 2.0, 4.0], atol=1e-14)
    assert rep["normalization"]["mu"] == pytest.approx(14 / 9, abs=1e-14)
    assert rep["classification"] == "regular"
    assert rep["connection"]["integrable_S"] is True


def test_analyze_special_type_exit(capsys, tmp_path):
    from builders import make_jet

    path = tmp_path / "special.json"
    save_jet(make_jet(np.diag([1.0, -1.0]), normalized=True), path)
    code, out, _ = run(capsys, "analyze", path)
    assert code == cli.EXIT_DEGENERATE
    assert json.loads(out)["reports"][0]["classification"] == "special-type"


def test_analyze_malformed_file(capsys):
    code, out, err = run(capsys, "analyze", DATA / "malformed.json")
    assert code == cli.EXIT_INVALID
    assert "parse error" in err
    assert "error" in json.loads(out)["reports"][0]


def test_analyze_schema_error_on_stderr(capsys, tmp_path):
    data = json.loads((DATA / "cone_n4.json").read_text())
    del data["lambda3"]
    path = tmp_path / "bad.json"
    path.write_text(json.dumps(data))
    code, _, err = run(capsys, "analyze", path)
    assert code == cli.EXIT_INVALID
    assert "schema error" in err and "lambda3" in err


def test_analyze_needs_input(capsys):
    code, _, err = run(capsys, "analyze")
    assert code == cli.EXIT_INVALID
    assert "at least one" in err


def test_analyze_parallel_is_deterministic(capsys, tmp_path):
    rng = np.random.default_rng(5)
    paths = []
    for k in range(4):
        p = tmp_path / f"jet{k}.json"
        save_jet(random_jet(rng, 3, reduced=True), p)
        paths.append(p)
    serial = run(capsys, "analyze", *paths)
    parallel = run(capsys, "analyze", "--jobs", 3, *paths)
    assert serial == parallel
    assert serial[0] == cli.EXIT_OK


def test_csv_format(capsys):
    code, out, _ = run(capsys, "analyze", "--format", "csv", DATA / "diag124.json")
    rows = dict(csv.reader(out.splitlines()[1:]))
    assert rows["reports[0].classification"] == "regular"
    assert out.splitlines()[0] == "key,value"


def test_out_file(capsys, tmp_path):
    out = tmp_path / "rep.json"
    code, stdout, _ = run(capsys, "analyze", "-o", out, DATA / "cone_n4.json")
    assert code == 0 and stdout == ""
    assert json.loads(out.read_text())["command"] == "analyze"


# -- tolerances -----------------------------------------------------------------------


def test_unknown_tolerance(capsys):
    code, _, err = run(capsys, "analyze", "--tol", "bogus=1", DATA / "cone_n4.json")
    assert code == cli.EXIT_INVALID
    assert "unknown tolerance 'bogus'" in err


def test_bad_tolerance_values(capsys):
    assert run(capsys, "analyze", "--tol", "cluster", DATA / "cone_n4.json")[0] == 2
    assert run(capsys, "analyze", "--tol", "cluster=-1", DATA / "cone_n4.json")[0] == 2
    assert run(capsys, "analyze", "--jobs", 0, DATA / "cone_n4.json")[0] == 2


def test_strict_profile_from_environment(capsys, monkeypatch):
    monkeypatch.setenv("LJET_TOL_PROFILE", "strict")
    assert run(capsys, "analyze", DATA / "diag124.json")[0] == 0
    monkeypatch.setenv("LJET_TOL_PROFILE", "lenient")
    code, _, err = run(capsys, "analyze", DATA / "diag124.json")
    assert code == 2 and "unknown tolerance profile" in err


# -- gauge-check ----------------------------------------------------------------------


def test_gauge_check_zero_params(capsys):
    code, out, _ = run(capsys, "gauge-check", "-i", DATA / "diag124.json", "--steps", 200)
    assert code == cli.EXIT_OK
    rep = json.loads(out)["report"]
    for name, row in rep["checks"].items():
        if name.startswith("law:") or name in ("composition", "focus_invariance"):
            assert row["residual"] == 0.0, name
    assert abs(rep["weights"]["mu"]["measured"] - 2.0) < 1e-6


def test_gauge_check_with_params(capsys, tmp_path):
    rng = np.random.default_rng(11)
    jet_path, par_path = tmp_path / "jet.json", tmp_path / "params.json"
    save_jet(random_jet(rng, 3, reduced=True), jet_path)
    par_path.write_text(json.dumps(GaugeParams.random(rng, 3).to_dict()))
    code, out, _ = run(capsys, "gauge-check", "-i", jet_path, "--params", par_path,
                       "--t", 0.5, "--steps", 200)
    rep = json.loads(out)["report"]
    assert code == cli.EXIT_OK, rep["checks"]
    assert rep["checks"]["composition"]["residual"] < 1e-9
    assert "focus_invariance" not in rep["checks"]


def test_gauge_check_tolerance_failure_exits_3(capsys):
    code, _, err = run(capsys, "gauge-check", "-i", DATA / "diag124.json", "--steps", 200,
                       "--tol", "weight=1e-300")
    assert code == cli.EXIT_DEGENERATE
    assert "weight:" in err


def test_gauge_check_bad_inputs(capsys, tmp_path):
    assert run(capsys, "gauge-check", "-i", DATA / "diag124.json", "--steps", 10)[0] == 2
    par = tmp_path / "p.json"
    par.write_text(json.dumps({"pi_a0": [1.0]}))
    code, _, err = run(capsys, "gauge-check", "-i", DATA / "diag124.json", "--params", par)
    assert code == 2 and "invalid gauge parameters" in err


# -- cartan -----------------------------------------------------------------------------


def test_cartan(capsys):
    code, out, _ = run(capsys, "cartan", "-n", 4, 5, 10)
    assert code == 0
    reps = json.loads(out)["reports"]
    assert [(r["Q"], r["N"]) for r in reps] == [(3, 3), (6, 6), (36, 36)]


def test_cartan_rejects_n3(capsys):
    code, _, err = run(capsys, "cartan", "-n", 3)
    assert code == cli.EXIT_INVALID
    assert "at least 4" in err


# -- model ---------------------------------------------------------------------------------


def _model(capsys, tmp_path, spec, *extra):
    spec_path = tmp_path / "spec.json"
    spec_path.write_text(json.dumps(spec))
    out = tmp_path / "out"
    code, _, err = run(capsys, "model", "-i", spec_path, "-o", out, *extra)
    return code, out, err


def _foci_rows(out):
    rows = list(csv.reader((out / "foci.csv").open()))
    return [[float(x) for x in r[1:]] for r in rows[1:]]


def test_model_cone(capsys, tmp_path):
    code, out, _ = _model(capsys, tmp_path, {"variant": "null-cone", "n": 4, "count": 3, "steps": 100})
    assert code == 0
    for row in _foci_rows(out):
        assert max(row) - min(row) < 1e-8
    assert sorted(p.name for p in out.iterdir())[:2] == ["foci.csv", "jet_000.json"]
    report = json.loads((out / "report.json").read_text())
    assert all(g["principal_angle"] < 1e-8 for g in report["generators"])
    # fixtures written by the model pass the analyzer
    assert run(capsys, "analyze", out / "jet_000.json")[0] == 0


def test_model_ellipsoid_and_sphere(capsys, tmp_path):
    code, out, _ = _model(capsys, tmp_path, {"variant": "null-ruled", "axes": [1.0, 1.5, 2.0],
                                             "generators": [[1.0, 1.0], [2.0, 4.0]], "steps": 100})
    assert code == 0
    rows = _foci_rows(out)
    assert len(rows) == 2 and all(len(r) == 2 and r[1] - r[0] > 1e-3 for r in rows)
    code, out, _ = _model(capsys, tmp_path, {"variant": "null-ruled", "n": 4, "radius": 2.0,
                                             "count": 2, "steps": 100})
    assert code == 0
    for row in _foci_rows(out):
        assert row == pytest.approx([0.5, 0.5], abs=1e-8)


def test_model_errors(capsys, tmp_path):
    code, _, err = _model(capsys, tmp_path, {"variant": "null-ruled", "axes": [1.0, 1.5, 2.0],
                                             "generators": [[0.0, 1.0]]})
    assert code == cli.EXIT_DEGENERATE and "singular chart point" in err
    code, _, err = _model(capsys, tmp_path, {"variant": "torus", "axes": [1.0, 1.0, 1.0]})
    assert code == cli.EXIT_INVALID
    code, _, _ = _model(capsys, tmp_path, {"variant": "null-ruled", "axes": [1.0, 1.5, 2.0],
                                           "generators": [[1.0]]})
    assert code == cli.EXIT_INVALID


def test_model_is_reproducible(capsys, tmp_path):
    spec = {"variant": "null-ruled", "axes": [1.0, 1.5, 2.0], "count": 2, "steps": 100}
    a = tmp_path / "a"
    b = tmp_path / "b"
    a.mkdir()
    b.mkdir()
    _, out_a, _ = _model(capsys, a, spec, "--seed", 7)
    _, out_b, _ = _model(capsys, b, spec, "--seed", 7, "--jobs", 2)
    for name in ("report.json", "foci.csv", "jet_001.json", "trajectory_001.csv"):
        assert (out_a / name).read_bytes() == (out_b / name).read_bytes()


# -- entry points ------------------------------------------------------------------------


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "lightlike", "cartan", "-n", "5"],
                          capture_output=True, text=True, check=False)
    assert proc.returncode == 0
    assert json.loads(proc.stdout)["reports"][0]["Q"] == 6


def test_usage_error_from_argparse(capsys):
    with pytest.raises(SystemExit) as exc:
        cli.main(["frobnicate"])
    assert exc.value.code == 2
