import numpy as np
import pytest

from lightlike import pipeline
from lightlike.jet_model import CurvatureSlice, random_jet
from lightlike.tolerances import DEFAULT, STRICT, Tolerances, parse_override, profile

from builders import diag_jet, make_jet


def test_regular_jet_runs_every_stage(rng):
    rep = pipeline.analyze(random_jet(rng, 3, reduced=True, with_phi=True))
    assert rep.classification == pipeline.REGULAR
    assert rep.connection is not None and rep.connection.gamma1 is not None
    assert rep.normalization.tau_ab is not None
    assert max(rep.residuals.values()) < 1e-9


def test_non_reduced_jet_skips_connection(rng):
    rep = pipeline.analyze(random_jet(rng, 3))
    assert rep.classification == pipeline.REGULAR
    assert rep.connection is None
    assert any("connection skipped" in note for note in rep.notes)
    assert rep.normalization.P_a is not None


def test_umbilical_branch_uses_weyl_trace():
    c = CurvatureSlice.zeros(2)
    Ca_b1c = np.zeros((2, 2, 2))
    Ca_b1c[1, 0, 1] = 1.5
    c = CurvatureSlice(c.C1_11a, c.C1_1ab, c.Cn_ab1, Ca_b1c, c.Ca_bce, c.C_11a, c.C_1ab)
    rep = pipeline.analyze(make_jet(np.eye(2), curvature=c))
    assert rep.classification == pipeline.UMBILICAL
    np.testing.assert_allclose(rep.normalization.mu_a, [-3.0, 0.0])
    assert not rep.pole.regular


def test_special_type_stops_before_screen():
    rep = pipeline.analyze(make_jet(np.diag([2.0, 0.0])))   # n = 4, nu = 0
    assert rep.degenerate
    assert rep.normalization.H_mixed is not None and rep.normalization.P_a is None


def test_raw_jet_is_normalized_first():
    rep = pipeline.analyze(diag_jet([1.0, 2.0, 4.0]))
    assert rep.foci.pole_coordinate == pytest.approx(7 / 3)
    assert rep.normalization.mu == pytest.approx(14 / 9)
    assert rep.residuals["apolarity"] < 1e-15


# -- tolerances ------------------------------------------------------------------------


def test_profiles(monkeypatch):
    assert STRICT.cluster == DEFAULT.cluster / 10
    monkeypatch.delenv("LJET_TOL_PROFILE", raising=False)
    assert profile() is DEFAULT
    assert profile("strict") is STRICT
    with pytest.raises(ValueError, match="unknown tolerance profile"):
        profile("loose")


def test_overrides():
    assert parse_override(" cluster = 1e-6") == ("cluster", 1e-6)
    tol = DEFAULT.with_overrides({"cluster": 1e-6})
    assert tol.cluster == 1e-6 and tol.pivot == DEFAULT.pivot
    with pytest.raises(KeyError):
        DEFAULT.with_overrides({"nope": 1.0})
    with pytest.raises(ValueError):
        DEFAULT.with_overrides({"cluster": 0.0})
    with pytest.raises(ValueError):
        parse_override("cluster")
    assert all(v > 0 for v in Tolerances().as_dict().values())
