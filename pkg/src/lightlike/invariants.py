"""Invariants of a lightlike hypersurface built from its jet.

Covariant screen objects (``h_ab``, ``mu_a``, ...) are plain arrays; mixed
objects are stored upper index first (see :mod:`lightlike.tensor_core`).  A
contraction written ``h_a^b v_b`` is evaluated as ``h_ac g^{cb} v_b``, i.e.
``h @ g_inv @ v``, and ``Htilde_a^b M_b`` as ``Htilde.T @ M`` for the mixed
matrix ``Htilde``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .jet_model import HypersurfaceJet
from .tensor_core import cluster_values, pencil_eigen, symmetrize
from .tolerances import DEFAULT


class DegenerateError(ArithmeticError):
    """The invariant requested does not exist at this point."""

    verdict = "degenerate"


class UmbilicalPointError(DegenerateError):
    verdict = "umbilical"


class SpecialTypeError(DegenerateError):
    verdict = "special-type"


@dataclass(frozen=True)
class FociReport:
    s: np.ndarray              # all roots, ascending, with multiplicity
    distinct: np.ndarray       # distinct roots
    multiplicities: np.ndarray
    lambda_mean: float
    pole_coordinate: float

    @property
    def vieta_defect(self) -> float:
        return float(abs(np.sum(self.s) - len(self.s) * self.lambda_mean))


@dataclass(frozen=True)
class PoleRegularity:
    regular: bool
    det: float
    relative_det: float


@dataclass(frozen=True)
class NormalizingAffinor:
    H: np.ndarray                 # H^a_b, upper index first
    H_inv: np.ndarray | None      # None when H is degenerate
    det: float
    relative_det: float

    @property
    def singular(self) -> bool:
        return self.H_inv is None


@dataclass(frozen=True)
class NormalizingObjects:
    M: np.ndarray
    N: np.ndarray
    P: np.ndarray
    Q: np.ndarray


@dataclass(frozen=True)
class ScreenFrame:
    """Basis ``C_a = A_a + y_a A_0 + z_a A_1`` of the invariant screen.

    ``y_a = P_a`` and ``z_a = -Q_a``.  With ``Q_a = Ht_a^b N_b / mu`` the
    laws of ``mu_a`` and ``nu_a`` give ``Q_a`` the opposite sign of
    ``pi_a^1`` to the one the invariance of the subspace demands, so the
    invariant choice is ``z_a = -Q_a``.

    Row ``a`` of ``coefficients`` expands ``C_a`` over
    ``(A_0, A_1, A_2, ..., A_{n-1}, A_n, A_{n+1})``.
    """

    P: np.ndarray
    Q: np.ndarray
    coefficients: np.ndarray

    @property
    def y(self) -> np.ndarray:
        return self.coefficients[:, 0]

    @property
    def z(self) -> np.ndarray:
        return self.coefficients[:, 1]

    def screen_rank(self) -> int:
        """Rank of ``{A_0, C_a}``; the projective screen has dimension rank - 1."""
        e0 = np.zeros(self.coefficients.shape[1])
        e0[0] = 1.0
        return int(np.linalg.matrix_rank(np.vstack([e0, self.coefficients])))


@dataclass(frozen=True)
class InvariantPoint:
    tau: float
    Cn_coordinate: float           # C_n = A_n + Cn_coordinate * A_0
    congruence_foci: np.ndarray    # complex, sorted by (real, imag)

    @property
    def vieta_defect(self) -> float:
        return float(abs(np.sum(self.congruence_foci) + len(self.congruence_foci) * self.tau))


def _spectral_norm(a) -> float:
    return float(np.linalg.norm(a, 2)) if np.size(a) else 0.0


# -- second order -------------------------------------------------------------


def singular_points(jet: HypersurfaceJet, *, cluster_tol=DEFAULT.cluster) -> FociReport:
    """Coordinates ``s`` of the foci ``F = A_1 - s A_0`` on the generator."""
    s, _ = pencil_eigen(jet.metric, jet.lam)
    distinct, mult = cluster_values(s, cluster_tol)
    lam_mean = float(np.sum(jet.metric.g_inv * jet.lam)) / jet.m
    return FociReport(s=s, distinct=distinct, multiplicities=mult,
                      lambda_mean=lam_mean, pole_coordinate=lam_mean)


def fundamental_tensor(jet: HypersurfaceJet):
    """``h_ab = lambda_ab - lambda g_ab`` and its mixed form ``h^a_b``."""
    lam_mean = float(np.sum(jet.metric.g_inv * jet.lam)) / jet.m
    h = symmetrize(jet.lam - lam_mean * jet.g)
    return h, jet.metric.g_inv @ h


def pole_regularity(jet: HypersurfaceJet, *, threshold=DEFAULT.det_threshold,
                    umbilical_tol=DEFAULT.umbilical) -> PoleRegularity:
    """Is the harmonic pole a regular point of the generator?

    The test is ``|det h^a_b| > threshold * |h^a_b|^m`` with the spectral
    norm.  The umbilical case is never regular; it is detected first, since
    the relative determinant of an ``h`` that is zero up to roundoff is
    just noise.
    """
    _, hm = fundamental_tensor(jet)
    det = float(np.linalg.det(hm))
    if is_umbilical(jet, tol=umbilical_tol):
        return PoleRegularity(regular=False, det=det, relative_det=0.0)
    scale = _spectral_norm(hm) ** jet.m
    rel = abs(det) / scale if scale > 0 else 0.0
    return PoleRegularity(regular=bool(rel > threshold), det=det, relative_det=rel)


def is_umbilical(jet: HypersurfaceJet, *, tol=DEFAULT.umbilical) -> bool:
    h, _ = fundamental_tensor(jet)
    return bool(np.linalg.norm(h) <= tol * max(1.0, np.linalg.norm(jet.lam)))


def mu_invariants(jet: HypersurfaceJet):
    """``mu = (1/m) g^ab lambda_ae g^ec lambda_cb`` and ``mu_c = -(1/m) g^ab lambda_abc``."""
    lm = jet.metric.g_inv @ jet.lam
    mu = float(np.trace(lm @ lm)) / jet.m
    mu_a = -np.einsum("ab,abc->c", jet.metric.g_inv, jet.lam3) / jet.m
    return mu, mu_a


def umbilical_mu_a(jet: HypersurfaceJet) -> np.ndarray:
    """``mu_a = 2/(n-3) C^b_{1ba}`` at an umbilical point.

    ``C^b_{1ba}`` is not stored directly.  Pair symmetry and skew-symmetry
    in the last pair of the Weyl tensor give ``C^b_{1ba} = -C^d_{a1d}``, a
    trace of the stored ``Ca_b1c``.
    """
    c1 = -np.einsum("dad->a", jet.curvature.Ca_b1c)
    return 2.0 / (jet.n - 3) * c1


# -- third order -----------------------------------------------------------------


def normalizing_affinor(jet: HypersurfaceJet, mu: float, *, threshold=DEFAULT.det_threshold,
                        umbilical_tol=DEFAULT.umbilical) -> NormalizingAffinor:
    """``H^a_b = h^a_c h^c_b + (nu / 2 mu) h^a_b - mu delta^a_b``.

    Built from ``h`` so it is meaningful before harmonic normalisation as
    well.  Degeneracy is judged against the sum of the norms of the three
    terms, raised to the power ``m``.
    """
    _, hm = fundamental_tensor(jet)
    if not mu > umbilical_tol * max(1.0, _spectral_norm(hm) ** 2):
        raise UmbilicalPointError("umbilical point: H undefined")
    k = jet.nu / (2.0 * mu)
    hh = hm @ hm
    H = hh + k * hm - mu * np.eye(jet.m)
    det = float(np.linalg.det(H))
    scale = (_spectral_norm(hh) + abs(k) * _spectral_norm(hm) + mu) ** jet.m
    rel = abs(det) / scale
    H_inv = np.linalg.inv(H) if rel > threshold else None
    return NormalizingAffinor(H=H, H_inv=H_inv, det=det, relative_det=rel)


H_affinor = normalizing_affinor


def normalizing_objects(jet: HypersurfaceJet, mu: float, mu_a, H_inv) -> NormalizingObjects:
    """``M_a, N_a`` and the screen coefficients ``P_a = Ht_a^b M_b``, ``Q_a = Ht_a^b N_b / mu``."""
    if H_inv is None:
        raise SpecialTypeError(
            "special-type hypersurface: invariants mu, nu algebraically related (H degenerate)")
    if not mu > 0:
        raise UmbilicalPointError("umbilical point: normalizing objects undefined")
    h, _ = fundamental_tensor(jet)
    mu_a = np.asarray(mu_a, dtype=float)
    g_inv = jet.metric.g_inv
    M = h @ g_inv @ mu_a + jet.nu / (2.0 * mu) * mu_a - 0.5 * jet.nu_a
    N = 0.5 * h @ g_inv @ jet.nu_a - mu * mu_a
    H_inv = np.asarray(H_inv)
    P = H_inv.T @ M
    Q = H_inv.T @ N / mu
    return NormalizingObjects(M=M, N=N, P=P, Q=Q)


def screen_frame(jet: HypersurfaceJet, P, Q) -> ScreenFrame:
    m = jet.m
    coeff = np.zeros((m, m + 4))
    coeff[:, 0] = P
    coeff[:, 1] = -np.asarray(Q, float)
    coeff[:, 2:2 + m] = np.eye(m)
    return ScreenFrame(P=np.asarray(P, float), Q=np.asarray(Q, float), coefficients=coeff)


# -- fourth order ----------------------------------------------------------------


def invariant_point(jet: HypersurfaceJet, tau_ab, *, symmetry_tol=DEFAULT.symmetry) -> InvariantPoint:
    """Mean ``tau`` of ``tau_ab``, the point ``C_n = A_n - tau A_0`` and the
    singular points ``z_a`` of the normalizing congruence (eigenvalues of ``-tau^a_b``).

    A ``tau_ab`` that is symmetric up to ``symmetry_tol`` goes through the
    symmetric pencil solver, so its singular points come out exactly real.
    """
    tau_ab = np.asarray(tau_ab, dtype=float)
    tm = jet.metric.g_inv @ tau_ab
    tau = float(np.trace(tm)) / jet.m
    scale = max(1.0, float(np.max(np.abs(tau_ab)))) if tau_ab.size else 1.0
    if np.max(np.abs(tau_ab - tau_ab.T), initial=0.0) <= symmetry_tol * scale:
        s, _ = pencil_eigen(jet.metric, symmetrize(-tau_ab))
        z = s.astype(complex)
    else:
        z = np.linalg.eigvals(-tm).astype(complex)
    z = z[np.lexsort((z.imag, z.real))]
    return InvariantPoint(tau=tau, Cn_coordinate=-tau, congruence_foci=z)
