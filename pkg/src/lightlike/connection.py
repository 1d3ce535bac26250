"""Normalizing forms, the induced connections and integrability of the screen.

In the reduced frame (``mu_a = nu_a = 0``) the forms ``omega_a^0`` and
``omega_a^1`` are expanded as

    omega_a^0 = sigma_a omega^1 + sigma_ab omega^b
    omega_a^1 = tau_a omega^1 + tau_ab omega^b

and the coefficients are fixed by two linear equations per basis form.  With
``K v = h_a^b v_b`` (the matrix ``h g^-1``) they read

    -K sigma_a - mu tau_a + 2 C_11a = 0
    -K sigma_ab - mu tau_ab - C_1ab - nu_ab = 0
    2 mu sigma_a - (2 mu K + nu) tau_a + 4 mu C^1_11a - rho_a = 0
    2 mu sigma_ab - (2 mu K + nu) tau_ab - 2 mu C^1_1ab - rho_ab = 0

(matrices act on the first index).  They share one ``2m x 2m`` block matrix,
so all ``m + 1`` right-hand sides are solved with a single factorisation.

2-forms are stored as skew coefficient arrays over the basis
``(omega^1, omega^2, ..., omega^{n-1})``.  For the torsion and the curvature
components the convention is that of a tensor: ``Theta = T_1a omega^1 ^ omega^a
+ T_ab omega^a ^ omega^b`` with ``T_1a`` summed once over ``a`` and ``T_ab``
skew and summed over all ``a, b``.  The full 2-forms returned by
:func:`gamma1_curvature` use ``Omega = sum_{k<l} F_kl omega^k ^ omega^l``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .invariants import (
    SpecialTypeError,
    UmbilicalPointError,
    fundamental_tensor,
    is_umbilical,
    mu_invariants,
    normalizing_affinor,
)
from .jet_model import HypersurfaceJet
from .tensor_core import alternate
from .tolerances import DEFAULT


class PreconditionError(ValueError):
    """The jet is not in the frame the solve requires."""


@dataclass(frozen=True)
class NormalizingForms:
    sigma_a: np.ndarray
    tau_a: np.ndarray
    sigma_ab: np.ndarray
    tau_ab: np.ndarray
    residual: float = 0.0


@dataclass(frozen=True)
class Torsion:
    torsion_1_1a: np.ndarray   # -tau_a
    torsion_1_ab: np.ndarray   # tau_[ab]
    torsion_a_1b: np.ndarray   # h^a_b

    def vanishes(self, tol=1e-12) -> bool:
        return all(np.max(np.abs(x), initial=0.0) <= tol
                   for x in (self.torsion_1_1a, self.torsion_1_ab, self.torsion_a_1b))


@dataclass(frozen=True)
class Curvature:
    R1_11a: np.ndarray
    R1_1ab: np.ndarray
    Ra_b1c: np.ndarray
    Ra_bce: np.ndarray


@dataclass(frozen=True)
class Gamma1Curvature:
    """Curvature 2-forms of the torsion-free connection, ``sum_{k<l} F_kl w^k ^ w^l``."""

    omega_11: np.ndarray   # (m+1, m+1)
    omega_1a: np.ndarray   # (m, m+1, m+1), Omega^1_a
    omega_a1: np.ndarray   # (m, m+1, m+1), Omega^a_1
    omega_ab: np.ndarray   # (m, m, m+1, m+1), Omega^a_b


@dataclass(frozen=True)
class Integrability:
    integrable_S: bool
    integrable_Stilde: bool
    residual_S: float          # |tau_[ab]|
    residual_Stilde: float     # |K sigma + C_1 - transpose|
    identity_residual: float   # relative defect of the linking identity


@dataclass(frozen=True)
class ConnectionReport:
    forms: NormalizingForms
    torsion: Torsion
    curvature: Curvature
    integrability: Integrability
    gamma1: Gamma1Curvature | None = None


# -- solve -------------------------------------------------------------------------


def _norm(x) -> float:
    return float(np.linalg.norm(x))


def _check_reduced(jet: HypersurfaceJet, mu: float, mu_a, tol) -> None:
    h, _ = fundamental_tensor(jet)
    lam_mean = float(np.sum(jet.metric.g_inv * jet.lam)) / jet.m
    scale = max(1.0, _norm(jet.lam))
    if abs(lam_mean) > tol.reduced_frame * scale:
        raise PreconditionError("jet is not harmonic-normalized (A_1 is not the harmonic pole)")
    third = max(1.0, _norm(jet.lam3), _norm(jet.nu_a))
    if _norm(mu_a) > tol.reduced_frame * third or _norm(jet.nu_a) > tol.reduced_frame * third:
        raise PreconditionError("frame not reduced: mu_a and nu_a must vanish")


def _system(jet: HypersurfaceJet, mu: float):
    """Block matrix of the coefficient equations and the lowered contraction ``K``."""
    h, _ = fundamental_tensor(jet)
    m = jet.m
    K = h @ jet.metric.g_inv
    eye = np.eye(m)
    A = np.block([[-K, -mu * eye], [2 * mu * eye, -(2 * mu * K + jet.nu * eye)]])
    return A, K


def _rhs(jet: HypersurfaceJet, mu: float):
    c = jet.curvature
    vec = np.concatenate([-2.0 * c.C_11a, jet.rho_a - 4.0 * mu * c.C1_11a])
    mat = np.vstack([c.C_1ab + jet.nu_ab, jet.rho_ab + 2.0 * mu * c.C1_1ab])
    return vec, mat


def equation_residuals(jet: HypersurfaceJet, forms: NormalizingForms, mu: float | None = None):
    """Relative defects of the four coefficient equations.

    Each equation is measured against the sum of the norms of its terms, so
    the numbers are comparable across scales.
    """
    if mu is None:
        mu, _ = mu_invariants(jet)
    h, _ = fundamental_tensor(jet)
    K = h @ jet.metric.g_inv
    c = jet.curvature
    s1, t1, s2, t2 = forms.sigma_a, forms.tau_a, forms.sigma_ab, forms.tau_ab
    nu = jet.nu
    terms = {
        "omega1_first": (-K @ s1, -mu * t1, 2 * c.C_11a),
        "omegab_first": (-K @ s2, -mu * t2, -c.C_1ab, -jet.nu_ab),
        "omega1_second": (2 * mu * s1, -2 * mu * K @ t1, -nu * t1, 4 * mu * c.C1_11a, -jet.rho_a),
        "omegab_second": (2 * mu * s2, -2 * mu * K @ t2, -nu * t2, -2 * mu * c.C1_1ab, -jet.rho_ab),
    }
    out = {}
    for name, parts in terms.items():
        total = _norm(sum(parts))
        scale = sum(_norm(p) for p in parts)
        out[name] = total / scale if scale > 0 else 0.0
    return out


def solve_normalizing_forms(jet: HypersurfaceJet, *, strict=True, tol=DEFAULT) -> NormalizingForms:
    """Solve for ``sigma_a, tau_a, sigma_ab, tau_ab`` in the reduced frame.

    With ``strict`` (the default) a degenerate ``H`` is rejected as a
    special-type hypersurface, since the reduced frame is then not
    determined.  ``strict=False`` only needs the block system to be
    invertible, which lets hand-built fixtures with ``H = 0`` through.
    """
    mu, mu_a = mu_invariants(jet)
    if is_umbilical(jet, tol=tol.umbilical):
        raise UmbilicalPointError("umbilical point: normalizing forms undefined")
    _check_reduced(jet, mu, mu_a, tol)
    if strict:
        aff = normalizing_affinor(jet, mu, threshold=tol.det_threshold, umbilical_tol=tol.umbilical)
        if aff.singular:
            raise SpecialTypeError(
                "special-type hypersurface: invariants mu, nu algebraically related (H degenerate)")
    A, _ = _system(jet, mu)
    m = jet.m
    lu = scipy.linalg.lu_factor(A, check_finite=True)
    if np.min(np.abs(np.diag(lu[0]))) <= tol.det_threshold * max(1.0, np.max(np.abs(A))):
        raise SpecialTypeError("special-type hypersurface: coefficient system singular")
    vec, mat = _rhs(jet, mu)
    sol = scipy.linalg.lu_solve(lu, np.column_stack([vec, mat]))
    forms = NormalizingForms(
        sigma_a=sol[:m, 0], tau_a=sol[m:, 0], sigma_ab=sol[:m, 1:], tau_ab=sol[m:, 1:])
    res = max(equation_residuals(jet, forms, mu).values())
    if res > tol.back_substitution:
        raise ArithmeticError(f"normalizing forms back-substitution residual {res:.2e}")
    return NormalizingForms(forms.sigma_a, forms.tau_a, forms.sigma_ab, forms.tau_ab, residual=res)


# -- connection gamma_2 ----------------------------------------------------------------


def gamma2_torsion(jet: HypersurfaceJet, forms: NormalizingForms) -> Torsion:
    _, hm = fundamental_tensor(jet)
    return Torsion(torsion_1_1a=-np.asarray(forms.tau_a, float),
                   torsion_1_ab=alternate(forms.tau_ab),
                   torsion_a_1b=hm.copy())


def gamma2_curvature(jet: HypersurfaceJet, forms: NormalizingForms) -> Curvature:
    """Curvature components of the connection on the screen distribution."""
    h, hm = fundamental_tensor(jet)
    g, g_inv = jet.g, jet.metric.g_inv
    K = h @ g_inv
    c = jet.curvature
    m = jet.m
    eye = np.eye(m)
    s1, t1 = np.asarray(forms.sigma_a, float), np.asarray(forms.tau_a, float)
    s2, t2 = np.asarray(forms.sigma_ab, float), np.asarray(forms.tau_ab, float)
    s1_up, t1_up = g_inv @ s1, g_inv @ t1
    s2_up, t2_up = g_inv @ s2, g_inv @ t2

    R1_11a = 2 * c.C1_11a - s1 - K @ t1
    R1_1ab = alternate(s2) + alternate(K @ t2) + alternate(c.C1_1ab)

    Ra_b1c = (np.einsum("ab,c->abc", eye, s1) + np.einsum("ac,b->abc", eye, s1)
              - np.einsum("bc,a->abc", g, s1_up) + np.einsum("ac,b->abc", hm, t1)
              - np.einsum("bc,a->abc", h, t1_up) + 2 * c.Ca_b1c)

    # X[a,b,c,e], alternated over the 2-form pair (c, e)
    X = (np.einsum("ae,bc->abce", eye, s2) + np.einsum("bc,ae->abce", g, s2_up)
         + np.einsum("ae,bc->abce", hm, t2) + np.einsum("bc,ae->abce", h, t2_up)
         - np.einsum("ab,ce->abce", eye, s2))
    C = c.Ca_bce
    Ra_bce = 0.5 * (X - np.swapaxes(X, 2, 3)) + 0.5 * (C - np.swapaxes(C, 2, 3))
    return Curvature(R1_11a=R1_11a, R1_1ab=R1_1ab, Ra_b1c=Ra_b1c, Ra_bce=Ra_bce)


# -- connection gamma_1 ----------------------------------------------------------------


def _wedge(a, b):
    return np.outer(a, b) - np.outer(b, a)


def _weyl_form(c_1a, c_ab):
    """2-form ``C_kl w^k ^ w^l`` from its ``(1, a)`` and ``(a, b)`` components."""
    m = len(c_1a)
    F = np.zeros((m + 1, m + 1))
    F[0, 1:] = 2 * np.asarray(c_1a)
    F[1:, 0] = -2 * np.asarray(c_1a)
    F[1:, 1:] = 2 * alternate(c_ab)
    return F


def gamma1_curvature(jet: HypersurfaceJet, forms: NormalizingForms) -> Gamma1Curvature:
    """Curvature 2-forms of the torsion-free connection on the normal bundle side.

    Needs the fifth-order coefficients ``phi1, phi_a`` of ``omega_n^0``.
    Weyl components ``C^1_akl`` and ``C^a_1kl`` are not part of the jet and
    enter as zero.
    """
    if not jet.has_fifth_order:
        raise ValueError("fifth-order data required (phi1, phi_a)")
    m = jet.m
    h, hm = fundamental_tensor(jet)
    g, g_inv = jet.g, jet.metric.g_inv
    mu, mu_a = mu_invariants(jet)
    c = jet.curvature

    def form(first, rest):
        return np.concatenate([[first], rest])

    w1 = form(1.0, np.zeros(m))                     # omega_0^1
    w = [form(0.0, np.eye(m)[a]) for a in range(m)]  # omega_0^a
    w10 = form(mu, mu_a)                             # omega_1^0
    wa0 = [form(forms.sigma_a[a], forms.sigma_ab[a]) for a in range(m)]
    wa1 = [form(forms.tau_a[a], forms.tau_ab[a]) for a in range(m)]
    wn0 = form(jet.phi1, jet.phi_a)
    wbn = [form(0.0, jet.lam[b]) for b in range(m)]
    wna = [sum(g_inv[a, b] * wa1[b] for b in range(m)) for a in range(m)]
    we0_up = [sum(g_inv[a, e] * wa0[e] for e in range(m)) for a in range(m)]

    omega_11 = 2 * _wedge(w10, w1) + sum(_wedge(w[a], wa0[a]) for a in range(m))
    omega_11 = omega_11 + _weyl_form(c.C1_11a, c.C1_1ab)

    omega_1a = np.array([
        _wedge(wa0[a], w10) - _wedge(sum(g[a, b] * w[b] for b in range(m)), wn0)
        for a in range(m)])
    omega_a1 = np.array([_wedge(w10, w[a]) for a in range(m)])

    trace_part = _wedge(w1, w10) + sum(_wedge(w[e], wa0[e]) for e in range(m))
    omega_ab = np.zeros((m, m, m + 1, m + 1))
    for a in range(m):
        for b in range(m):
            F = _wedge(wa0[b], w[a]) + _wedge(wbn[b], wna[a])
            F = F + sum(g[b, e] * _wedge(w[e], we0_up[a]) for e in range(m))
            if a == b:
                F = F - trace_part
            omega_ab[a, b] = F + _weyl_form(c.Ca_b1c[a, b], c.Ca_bce[a, b])
    return Gamma1Curvature(omega_11=omega_11, omega_1a=omega_1a, omega_a1=omega_a1,
                           omega_ab=omega_ab)


# -- integrability ----------------------------------------------------------------------


def integrability(jet: HypersurfaceJet, forms: NormalizingForms, *, tol=DEFAULT) -> Integrability:
    """Is the screen distribution (resp. the normal one) integrable?

    Both verdicts are measured against the scale of the ``omega^b`` equation
    that links them, so they agree whenever the linking identity holds.
    """
    mu, _ = mu_invariants(jet)
    h, _ = fundamental_tensor(jet)
    K = h @ jet.metric.g_inv
    c1 = jet.curvature.C_1ab
    ks = K @ forms.sigma_ab
    alt_tau = alternate(forms.tau_ab)
    skew_st = (ks + c1) - (ks + c1).T
    scale = _norm(ks) + mu * _norm(forms.tau_ab) + _norm(c1) + _norm(jet.nu_ab)
    scale = scale if scale > 0 else 1.0
    res_S = _norm(alt_tau)
    res_St = _norm(skew_st)
    identity = _norm(skew_st + 2 * mu * alt_tau)
    ident_scale = 2 * _norm(ks) + 2 * _norm(c1) + 2 * mu * _norm(alt_tau)
    return Integrability(
        integrable_S=bool(mu * res_S <= tol.integrability * scale),
        integrable_Stilde=bool(0.5 * res_St <= tol.integrability * scale),
        residual_S=res_S,
        residual_Stilde=res_St,
        identity_residual=identity / ident_scale if ident_scale > 0 else 0.0,
    )


def connection_report(jet: HypersurfaceJet, *, strict=True, tol=DEFAULT) -> ConnectionReport:
    forms = solve_normalizing_forms(jet, strict=strict, tol=tol)
    return ConnectionReport(
        forms=forms,
        torsion=gamma2_torsion(jet, forms),
        curvature=gamma2_curvature(jet, forms),
        integrability=integrability(jet, forms, tol=tol),
        gamma1=gamma1_curvature(jet, forms) if jet.has_fifth_order else None,
    )


# -- structure group ------------------------------------------------------------------


@dataclass(frozen=True)
class GaugeGroupCheck:
    scalar_residual: float   # d(pi_1^1 - pi_0^0)
    gl_residual: float       # Maurer-Cartan defect of pi_b^a - delta pi_0^0
    tol: float

    @property
    def ok(self) -> bool:
        return self.scalar_residual < self.tol and self.gl_residual < self.tol


def _d4(f, x, y, h, axis):
    """Fourth-order central derivative of ``f(x, y)`` along one argument."""
    if axis == 0:
        vals = [f(x + k * h, y) for k in (-2, -1, 1, 2)]
    else:
        vals = [f(x, y + k * h) for k in (-2, -1, 1, 2)]
    return (vals[0] - 8 * vals[1] + 8 * vals[2] - vals[3]) / (12 * h)


def random_group_family(rng, m: int):
    """Two-parameter family ``(s, t) -> (a, G)`` in ``R+ x GL(m)`` through a random point."""
    X, Y, Z = (rng.normal(size=(m, m)) / np.sqrt(m) for _ in range(3))
    G0 = np.eye(m) + 0.3 * rng.normal(size=(m, m)) / np.sqrt(m)
    c = rng.normal(size=3)

    def family(s, t):
        a = np.exp(c[0] * s + c[1] * t + c[2] * s * t)
        return a, scipy.linalg.expm(s * X + t * Y + s * t * Z) @ G0

    return family


def g2_structure_check(family=None, *, m=3, seed=0, point=(0.1, -0.2), step=1e-3,
                       tol=DEFAULT.identity) -> GaugeGroupCheck:
    """Check the structure equations of ``R+ x GL(m)`` on a two-parameter family.

    The invariant forms are ``d log a`` and ``G^-1 dG``; with
    ``theta = G^-1 dG`` the equation ``d theta^a_b = theta^c_b ^ theta^a_c``
    is the Maurer-Cartan equation ``d theta + theta ^ theta = 0``.
    Derivatives are nested fourth-order central differences.
    """
    if family is None:
        family = random_group_family(np.random.default_rng(seed), m)
    s0, t0 = point

    def log_a(s, t):
        return np.log(family(s, t)[0])

    def theta(s, t, axis):
        G = family(s, t)[1]
        dG = _d4(lambda x, y: family(x, y)[1], s, t, step, axis)
        return np.linalg.solve(G, dG)

    def dlog(s, t, axis):
        return _d4(log_a, s, t, step, axis)

    scalar = abs(_d4(lambda x, y: dlog(x, y, 1), s0, t0, step, 0)
                 - _d4(lambda x, y: dlog(x, y, 0), s0, t0, step, 1))
    ts, tt = theta(s0, t0, 0), theta(s0, t0, 1)
    d_tt_ds = _d4(lambda x, y: theta(x, y, 1), s0, t0, step, 0)
    d_ts_dt = _d4(lambda x, y: theta(x, y, 0), s0, t0, step, 1)
    mc = d_tt_ds - d_ts_dt + ts @ tt - tt @ ts
    return GaugeGroupCheck(scalar_residual=float(scalar), gl_residual=float(np.max(np.abs(mc))),
                           tol=tol)
