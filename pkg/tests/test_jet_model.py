import io
import json
from fractions import Fraction
from pathlib import Path

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lightlike.jet_model import (
    CurvatureSlice,
    JetParseError,
    JetSchemaError,
    JetValidationError,
    dumps_jet,
    jet_to_dict,
    load_jet,
    loads_jet,
    mean_eigenvalue,
    normalize_to_harmonic_pole,
    random_jet,
    save_jet,
    validate,
)

from builders import diag_jet, make_jet
from oracles import diag_h

DATA = Path(__file__).parent / "data"


def test_clean_jet_has_empty_report():
    assert validate(diag_jet([1.0, 2.0, 4.0])).ok


def test_lambda_asymmetry_is_cited_with_magnitude():
    lam = np.diag([1.0, 2.0])
    lam[0, 1] = 1e-3
    report = validate(make_jet(lam))
    v = report.get("lambda symmetry")
    assert v is not None
    assert v.magnitude == pytest.approx(1e-3)
    assert v.location == "[0,1]"


def test_trace_condition_is_cited():
    c = CurvatureSlice.zeros(2)
    c = CurvatureSlice(c.C1_11a, c.C1_1ab, np.eye(2), c.Ca_b1c, c.Ca_bce, c.C_11a, c.C_1ab)
    report = validate(make_jet(np.eye(2), curvature=c))
    assert report.get("trace condition").magnitude == pytest.approx(2.0)


def test_bad_metric_and_shape_are_cited():
    report = validate(make_jet(np.eye(2), g=np.diag([1.0, -1.0])))
    assert report.cites("g positive definiteness")
    report = validate(make_jet(np.eye(2), lam3=np.zeros((3, 3, 3))))
    assert report.cites("shape")


def test_nonfinite_entries_are_cited():
    lam = np.eye(2)
    lam[1, 1] = np.nan
    assert validate(make_jet(lam)).cites("finite values")


def test_dimension_below_four_is_rejected():
    jet = make_jet(np.eye(1))
    assert validate(jet).cites("dimension")


def test_load_cone_fixture():
    jet = load_jet(DATA / "cone_n4.json")
    np.testing.assert_array_equal(jet.lam, 1.5 * jet.g)


def test_missing_field_is_a_schema_error():
    data = json.loads((DATA / "cone_n4.json").read_text())
    del data["lambda3"]
    with pytest.raises(JetSchemaError, match="lambda3"):
        loads_jet(json.dumps(data))


def test_wrong_array_length_names_the_path():
    data = json.loads((DATA / "cone_n4.json").read_text())
    data["curvature"]["C_11a"] = [0.0]
    with pytest.raises(JetSchemaError, match="curvature/C_11a"):
        loads_jet(json.dumps(data))


def test_error_categories_are_distinct():
    with pytest.raises(JetParseError):
        load_jet(DATA / "malformed.json")
    bad = jet_to_dict(diag_jet([1.0, 2.0]))
    bad["g"] = [[1.0, 0.0], [0.0, -1.0]]
    with pytest.raises(JetValidationError, match="positive definiteness"):
        loads_jet(json.dumps(bad))
    # unchecked load still builds the object
    assert loads_jet(json.dumps(bad), check=False).g[1, 1] == -1.0


def test_round_trip_is_bit_identical(tmp_path):
    jet = load_jet(DATA / "diag124.json")
    path = tmp_path / "out.json"
    save_jet(jet, path)
    assert path.read_text() == (DATA / "diag124.json").read_text()
    again = load_jet(path)
    for name in ("g", "lam", "lam3", "nu_a", "rho_ab"):
        assert np.array_equal(getattr(again, name), getattr(jet, name))


def test_round_trip_with_fifth_order(rng):
    jet = random_jet(rng, 3, with_phi=True)
    buf = io.StringIO()
    save_jet(jet, buf)
    back = loads_jet(buf.getvalue())
    assert back.phi1 == jet.phi1
    assert np.array_equal(back.phi_a, jet.phi_a)
    assert dumps_jet(back) == buf.getvalue()


def test_normalize_umbilical_gives_zero():
    out = normalize_to_harmonic_pole(make_jet(2.5 * np.eye(3)))
    assert np.max(np.abs(out.lam)) < 1e-15
    assert out.harmonic_normalized


def test_normalize_diag_example():
    expected = [float(x) for x in diag_h([1, 2, 4])]
    assert diag_h([1, 2, 4]) == [Fraction(-4, 3), Fraction(-1, 3), Fraction(5, 3)]
    out = normalize_to_harmonic_pole(diag_jet([1.0, 2.0, 4.0]))
    np.testing.assert_allclose(np.diag(out.lam), expected, atol=1e-15)
    assert abs(np.trace(out.lam)) < 1e-15


def test_normalize_leaves_flagged_jet_alone():
    jet = diag_jet([1.0, 2.0, 4.0], normalized=True)
    assert normalize_to_harmonic_pole(jet) is jet


def test_harmonic_flag_is_validated():
    report = validate(diag_jet([1.0, 2.0, 4.0], normalized=True))
    assert report.cites("harmonic normalization")


@settings(max_examples=40)
@given(st.integers(0, 2**32 - 1), st.integers(2, 5))
def test_normalization_properties(seed, m):
    jet = random_jet(np.random.default_rng(seed), m, normalized=False)
    once = normalize_to_harmonic_pole(jet)
    twice = normalize_to_harmonic_pole(once.replace(harmonic_normalized=False))
    assert abs(np.sum(once.metric.g_inv * once.lam)) < 1e-12 * max(1.0, np.linalg.norm(jet.lam))
    np.testing.assert_allclose(twice.lam, once.lam, atol=1e-12 * max(1.0, np.linalg.norm(jet.lam)))
    assert abs(mean_eigenvalue(once)) < 1e-12 * max(1.0, np.linalg.norm(jet.lam))


@settings(max_examples=30)
@given(st.integers(0, 2**32 - 1), st.integers(2, 5), st.booleans(), st.booleans())
def test_random_jets_are_admissible(seed, m, reduced, flat):
    jet = random_jet(np.random.default_rng(seed), m, reduced=reduced, conformally_flat=flat)
    assert validate(jet).ok
    assert loads_jet(dumps_jet(jet)).n == m + 2
