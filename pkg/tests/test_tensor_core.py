import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from lightlike.tensor_core import (
    Affinor,
    MetricError,
    ScreenMetric,
    SymCubic,
    SymMatrix,
    alternate,
    cluster_values,
    covector_contract,
    cubic_symmetry_defect,
    lower_index,
    pencil_eigen,
    raise_index,
    symmetrize,
)

from conftest import screen_pairs, spd_matrices, sym_matrices
from oracles import charpoly_roots


def test_raise_index_identity_metric_is_noop(rng):
    t = rng.normal(size=(4, 4))
    assert np.array_equal(raise_index(np.eye(4), t), t)


@pytest.mark.parametrize("g, t, expected", [
    (np.diag([2.0, 2.0]), np.diag([2.0, 4.0]), np.diag([1.0, 2.0])),
    (np.eye(3), np.diag([1.0, 2.0, 4.0]), np.diag([1.0, 2.0, 4.0])),
])
def test_raise_index_examples(g, t, expected):
    np.testing.assert_allclose(raise_index(g, t), expected, rtol=0, atol=1e-15)


def test_raise_index_dimension_mismatch():
    with pytest.raises(ValueError, match="dimension mismatch"):
        raise_index(np.eye(3), np.eye(2))


def test_covector_contract_matches_explicit_sum(rng):
    g = np.diag([1.0, 4.0])
    t = np.array([[1.0, 2.0], [3.0, 5.0]])
    v = np.array([2.0, 8.0])
    # t_a^b v_b = t_ac g^cb v_b by hand: g^-1 v = (2, 2)
    np.testing.assert_allclose(covector_contract(g, t, v), [6.0, 16.0])


def test_metric_rejects_indefinite():
    with pytest.raises(MetricError, match="not positive definite"):
        ScreenMetric.from_matrix(np.diag([1.0, -1.0]))


def test_metric_rejects_asymmetric():
    with pytest.raises(MetricError, match="not symmetric"):
        ScreenMetric.from_matrix(np.array([[1.0, 0.5], [0.0, 1.0]]))


def test_metric_arrays_are_read_only():
    metric = ScreenMetric.identity(2)
    with pytest.raises(ValueError):
        metric.g[0, 0] = 3.0


def test_symmatrix_storage_is_exactly_symmetric():
    a = np.array([[1.0, 2.0 + 1e-14], [2.0, 3.0]])
    e = SymMatrix(a).entries
    assert e[0, 1] == e[1, 0]


def test_symmatrix_rejects_asymmetric():
    with pytest.raises(ValueError, match="not symmetric"):
        SymMatrix(np.array([[1.0, 2.0], [0.0, 1.0]]))


def test_symcubic_is_permutation_invariant(rng):
    t = rng.normal(size=(3, 3, 3))
    t = sum(np.transpose(t, p) for p in [(0, 1, 2), (0, 2, 1), (1, 0, 2), (1, 2, 0), (2, 0, 1), (2, 1, 0)])
    c = SymCubic(t + 1e-14 * rng.normal(size=t.shape))
    assert cubic_symmetry_defect(c.entries) == 0.0
    with pytest.raises(ValueError):
        SymCubic(rng.normal(size=(3, 3, 3)))


def test_affinor_trace_and_self_adjointness():
    g = np.diag([1.0, 2.0])
    T = Affinor(np.linalg.inv(g) @ np.array([[1.0, 3.0], [3.0, 2.0]]))
    assert T.trace() == pytest.approx(2.0)
    assert T.self_adjoint_defect(ScreenMetric.from_matrix(g)) < 1e-15


@pytest.mark.parametrize("t, expected", [
    ([[0, 1], [3, 0]], [[0, -1], [1, 0]]),
    ([[5, 2], [2, 5]], [[0, 0], [0, 0]]),
])
def test_alternate_examples(t, expected):
    np.testing.assert_array_equal(alternate(np.array(t, float)), expected)


def test_pencil_diagonal_read_off():
    s, _ = pencil_eigen(np.eye(3), np.diag([1.0, 2.0, 4.0]))
    np.testing.assert_allclose(s, [1.0, 2.0, 4.0], atol=1e-14)


def test_pencil_umbilical_multiplicity(rng):
    g = np.diag([1.0, 2.0, 3.0]) + 0.1
    s, _ = pencil_eigen(g, 2.5 * g)
    distinct, mult = cluster_values(s)
    np.testing.assert_allclose(distinct, [2.5])
    assert mult.tolist() == [3]


def test_pencil_eigenvectors_are_g_orthonormal(rng):
    g = np.array([[2.0, 0.3, 0.0], [0.3, 1.0, 0.2], [0.0, 0.2, 1.5]])
    lam = symmetrize(rng.normal(size=(3, 3)))
    s, V = pencil_eigen(g, lam)
    np.testing.assert_allclose(V.T @ g @ V, np.eye(3), atol=1e-12)
    np.testing.assert_allclose(lam @ V, g @ V @ np.diag(s), atol=1e-12)


def test_pencil_rejects_non_spd():
    with pytest.raises(MetricError):
        pencil_eigen(np.diag([1.0, 0.0]), np.eye(2))


def test_cluster_keeps_roundoff_zeros_together():
    distinct, mult = cluster_values([1e-16, -2e-16, 3e-17])
    assert mult.tolist() == [3]


def test_cluster_separates_distinct_values():
    distinct, mult = cluster_values([1.0, 1.0 + 1e-12, 2.0])
    np.testing.assert_allclose(distinct, [1.0, 2.0])
    assert mult.tolist() == [2, 1]


# -- properties ------------------------------------------------------------------


@given(screen_pairs())
def test_pencil_roots_real_against_companion_oracle(pair):
    g, lam = pair
    roots = charpoly_roots(g, lam)
    scale = max(1.0, np.max(np.abs(roots)))
    assert np.max(np.abs(roots.imag)) < 1e-6 * scale  # polynomial roots lose precision
    s, _ = pencil_eigen(g, lam)
    np.testing.assert_allclose(np.sort(roots.real), s, atol=1e-6 * scale)


@given(screen_pairs())
def test_raise_then_lower_round_trip(pair):
    g, t = pair
    back = lower_index(g, raise_index(g, t))
    assert np.linalg.norm(back - t) <= 1e-12 * max(1.0, np.linalg.norm(t)) * np.linalg.cond(g)


@given(st.integers(2, 5).flatmap(lambda m: st.tuples(spd_matrices(m), sym_matrices(m), spd_matrices(m))))
def test_pencil_congruence_invariance(triple):
    g, lam, A = triple
    s0, _ = pencil_eigen(g, lam)
    s1, _ = pencil_eigen(A.T @ g @ A, A.T @ lam @ A)
    scale = max(1.0, np.max(np.abs(s0)))
    np.testing.assert_allclose(s1, s0, atol=1e-10 * scale * np.linalg.cond(A) ** 2)


@given(screen_pairs())
def test_alternate_kills_symmetric_part(pair):
    _, lam = pair
    assert np.max(np.abs(alternate(lam))) == 0.0
