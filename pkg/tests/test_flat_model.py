import csv

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lightlike import flat_model as fm
from lightlike.invariants import singular_points
from lightlike.jet_model import dumps_jet, loads_jet, validate
from lightlike.pipeline import SPECIAL, analyze

from oracles import ellipsoid_focal_coordinates, ellipsoid_principal_curvatures_direct

ELLIPSOID = fm.ModelSpec.ellipsoid((1.0, 1.5, 2.0))
CONE = fm.ModelSpec.cone(4)
POINT = (0.4, 0.9, 1.3)


# -- spec -----------------------------------------------------------------------------


def test_spec_validation():
    with pytest.raises(ValueError, match="variant"):
        fm.ModelSpec("torus", 4, (1.0, 1.0, 1.0))
    with pytest.raises(ValueError, match="n must be"):
        fm.ModelSpec.sphere(3)
    with pytest.raises(ValueError, match="equal axes"):
        fm.ModelSpec(fm.NULL_CONE, 4, (1.0, 2.0, 1.0))
    with pytest.raises(ValueError, match="positive"):
        fm.ModelSpec.ellipsoid((1.0, -1.0, 1.0))


def test_spec_dict_round_trip():
    for spec in (ELLIPSOID, CONE, fm.ModelSpec.sphere(5, 2.0)):
        assert fm.ModelSpec.from_dict(spec.to_dict()) == spec
    cone = fm.ModelSpec.from_dict({"variant": "null-cone", "n": 4, "vertex": [1.0, 0.0, 0.5, 0.0]})
    np.testing.assert_allclose(cone.vertex, [1.0, 0.0, 0.5, 0.0])
    assert fm.ModelSpec.from_dict({"variant": "null-ruled", "axes": [1, 2, 3]}).n == 4


def test_cone_rulings_meet_at_the_vertex():
    spec = fm.ModelSpec.cone(5, vertex=[0.5, 1.0, -1.0, 0.0, 2.0], radius=1.5)
    for u in ([0.3, 1.0, 2.0], [2.0, 0.4, 5.0]):
        x = fm.surface_point(spec, np.concatenate([[-1.5], u]))
        np.testing.assert_allclose(x, spec.vertex, atol=1e-14)


# -- frames ---------------------------------------------------------------------------


def test_ambient_form_signature():
    w = np.linalg.eigvalsh(fm.ambient_form(5))
    assert np.sum(w > 0) == 5 and np.sum(w < 0) == 2


def test_lift_lands_on_the_quadric():
    x = np.array([0.3, 1.0, -2.0, 0.5])
    P = fm.lift(x)
    G = fm.ambient_form(4)
    assert abs(P @ G @ P) < 1e-15
    xi = np.array([1.0, 0.2, 0.0, -0.7])
    dP = fm.lift_tangent(x, xi)
    assert abs(P @ G @ dP) < 1e-15
    assert dP @ G @ dP == pytest.approx(fm.eta(xi, xi))


@pytest.mark.parametrize("spec", [ELLIPSOID, CONE, fm.ModelSpec.ellipsoid((1.0, 1.3, 1.7, 2.2))])
@pytest.mark.parametrize("harmonic", [True, False])
def test_frame_gram_matrix(spec, harmonic):
    p = np.array([0.3] + [0.9 + 0.2 * k for k in range(spec.m)])
    F = fm.adapted_frame(spec, p, harmonic=harmonic)
    assert F.gram_defect() < 1e-9
    assert np.all(np.linalg.eigvalsh(F.g) > 0)
    l = fm.ruling(spec, p[1:])
    assert abs(fm.eta(l, l)) < 1e-15


def test_stencil_derivative_orders():
    f = lambda p: np.sin(p[..., 0]) * np.exp(p[..., 1])  # noqa: E731
    p = np.array([[0.3, -0.2]])
    exact = np.array([np.cos(0.3) * np.exp(-0.2), np.sin(0.3) * np.exp(-0.2)])
    for order, h, tol in ((2, 1e-4, 1e-8), (4, 1e-2, 1e-8)):
        d = fm.stencil_derivative(f, p, h, order=order)
        np.testing.assert_allclose(np.ravel(d), exact, atol=tol)


# -- jets -----------------------------------------------------------------------------


def test_cone_is_umbilical():
    jet = fm.generate_jet(CONE, POINT, normalize=False)
    h = jet.lam - np.trace(np.linalg.solve(jet.g, jet.lam)) / jet.m * jet.g
    assert np.max(np.abs(h)) < 1e-8
    rep = singular_points(jet)
    assert rep.multiplicities.tolist() == [2]
    # the single focus is the vertex: s = 1 / (t + r)
    assert rep.distinct[0] == pytest.approx(1 / (POINT[0] + 1.0), abs=1e-8)


@pytest.mark.parametrize("t", [-0.2, 0.0, 0.5, 1.5])
def test_sphere_lambda_scales_along_ruling(t):
    spec = fm.ModelSpec.sphere(4, radius=2.0)
    jet = fm.generate_jet(spec, (t, 1.0, 2.0), normalize=False)
    lam_mean = np.trace(np.linalg.solve(jet.g, jet.lam)) / 2
    np.testing.assert_allclose(jet.lam, lam_mean * jet.g, atol=1e-8)
    assert lam_mean == pytest.approx(1 / (t + 2.0), abs=1e-8)


def test_ellipsoid_oracles_agree():
    axes, u = (1.0, 1.5, 2.0), (0.9, 1.3)
    k_direct = ellipsoid_principal_curvatures_direct(axes, u)
    s0 = ellipsoid_focal_coordinates(axes, u, 0.0)
    np.testing.assert_allclose(s0, k_direct, rtol=1e-12)


@pytest.mark.parametrize("p", [(0.4, 0.9, 1.3), (0.0, 2.1, 4.0), (-0.3, 1.4, 0.2)])
def test_ellipsoid_foci_match_analytic_focal_distances(p):
    jet = fm.generate_jet(ELLIPSOID, p, normalize=False)
    rep = singular_points(jet)
    expected = ellipsoid_focal_coordinates(ELLIPSOID.axes, p[1:], p[0])
    assert len(rep.distinct) == 2
    np.testing.assert_allclose(rep.s, expected, atol=1e-7)


def test_foci_agree_with_jacobian_degeneracy():
    for spec in (ELLIPSOID, CONE, fm.ModelSpec.ellipsoid((1.0, 1.3, 1.7, 2.2))):
        p = (0.2,) + tuple(0.8 + 0.3 * k for k in range(spec.m))
        cmp = fm.foci_cross_check(spec, p)
        assert cmp.max_difference < 1e-8
        assert np.all(cmp.sigma_min < 1e-8)


@pytest.mark.parametrize("spec", [CONE, ELLIPSOID])
def test_richardson_ratio(spec):
    assert 3.5 <= fm.richardson_ratio(spec, POINT) <= 4.5


def test_jet_diagnostics_are_small():
    s = fm.sample_point(fm.ModelSpec.ellipsoid((1.0, 1.3, 1.7, 2.2)), (0.3, 0.9, 1.1, 1.3))
    for name, value in s.diagnostics.items():
        assert value < 1e-6, name


def test_n4_flat_jets_are_special_type():
    # the third-order invariant nu vanishes identically on flat n = 4 models
    jet = fm.generate_jet(ELLIPSOID, POINT)
    assert abs(jet.nu) < 1e-8
    assert analyze(jet).classification == SPECIAL


point_params = st.tuples(st.floats(-0.3, 1.0), st.floats(0.4, 2.7), st.floats(0.0, 6.2))


@settings(max_examples=15)
@given(point_params)
def test_generated_jets_validate_with_flat_curvature(p):
    jet = fm.generate_jet(ELLIPSOID, p)
    assert jet.curvature.is_zero()
    assert validate(jet).ok
    assert validate(loads_jet(dumps_jet(jet))).ok


def test_singular_chart_points():
    with pytest.raises(fm.SingularChartPoint, match="pole"):
        fm.sample_point(ELLIPSOID, (0.2, 0.0, 1.0))
    with pytest.raises(fm.SingularChartPoint, match="vertex"):
        fm.sample_point(CONE, (-1.0, 1.0, 1.0))
    with pytest.raises(ValueError, match="parameters"):
        fm.sample_point(ELLIPSOID, (0.2, 1.0))


# -- development and geodesics -----------------------------------------------------------


@pytest.mark.parametrize("spec", [ELLIPSOID, CONE])
def test_development_keeps_the_tangent_space(spec):
    dev = fm.develop_along_generator(spec, (1.1, 0.7), 0.0, 1.0, steps=100)
    assert dev.max_angle < 1e-8
    assert dev.gram_defect < 1e-9
    assert dev.endpoint_defect < 1e-8
    assert dev.dA0_defect < 1e-8


@pytest.mark.parametrize("spec", [ELLIPSOID, CONE])
def test_rulings_are_geodesics(spec):
    u = (1.1, 0.7)
    assert fm.geodesic_residual(spec, u) < 1e-8
    bent = fm.perturbed_curve(u, (1.0, 0.5))
    assert fm.geodesic_residual(spec, u, curve=bent) > 1e-2


# -- csv ------------------------------------------------------------------------------------


def test_csv_writers(tmp_path):
    dev = fm.develop_along_generator(CONE, (1.0, 1.0), steps=100)
    path = tmp_path / "traj.csv"
    fm.write_trajectory_csv(path, dev)
    rows = list(csv.reader(path.open()))
    assert rows[0][:3] == ["t", "A0_0", "A0_1"]
    assert len(rows) == len(dev.t) + 1
    assert len(rows[1]) == 1 + 6 * 6
    fm.write_foci_csv(tmp_path / "foci.csv", [(0, [0.5, 0.5]), (1, [0.2, 0.7])])
    rows = list(csv.reader((tmp_path / "foci.csv").open()))
    assert rows[0] == ["generator", "s1", "s2"]
    assert float(rows[2][2]) == 0.7
