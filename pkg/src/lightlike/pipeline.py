"""End-to-end analysis of one jet: foci, normalization, connection, verdict."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import connection as conn
from . import invariants as inv
from .jet_model import HypersurfaceJet, normalize_to_harmonic_pole
from .tolerances import DEFAULT

REGULAR = "regular"
UMBILICAL = "umbilical"
SPECIAL = "special-type"


@dataclass(frozen=True)
class NormalizationResult:
    h_ab: np.ndarray
    h_mixed: np.ndarray
    mu: float
    mu_a: np.ndarray
    H_mixed: np.ndarray | None = None
    H_inv: np.ndarray | None = None
    M_a: np.ndarray | None = None
    N_a: np.ndarray | None = None
    P_a: np.ndarray | None = None
    Q_a: np.ndarray | None = None
    tau: float | None = None
    tau_ab: np.ndarray | None = None
    sigma_ab: np.ndarray | None = None
    tau_a: np.ndarray | None = None
    sigma_a: np.ndarray | None = None
    Cn_coordinate: float | None = None
    congruence_foci: np.ndarray | None = None


@dataclass(frozen=True)
class AnalysisReport:
    foci: inv.FociReport
    pole: inv.PoleRegularity
    normalization: NormalizationResult
    classification: str
    connection: conn.ConnectionReport | None
    residuals: dict[str, float] = field(default_factory=dict)
    notes: tuple[str, ...] = ()

    @property
    def degenerate(self) -> bool:
        return self.classification == SPECIAL


def _rel(x, scale) -> float:
    return float(abs(x) / max(1.0, scale))


def analyze(jet: HypersurfaceJet, *, tol=DEFAULT) -> AnalysisReport:
    """Run every stage that the jet supports and collect the identity checks.

    The jet is first moved to the harmonic pole.  Umbilical points stop
    after the second-order stage (plus the ``mu_a`` formula valid there);
    special-type points stop before the screen.  The connection stage needs
    the reduced frame and is skipped, with a note, otherwise.
    """
    foci = inv.singular_points(jet, cluster_tol=tol.cluster)
    pole = inv.pole_regularity(jet, threshold=tol.det_threshold, umbilical_tol=tol.umbilical)
    notes: list[str] = []
    res: dict[str, float] = {}
    lam_scale = float(np.linalg.norm(jet.lam))
    res["vieta_foci"] = _rel(foci.vieta_defect, lam_scale)

    nj = normalize_to_harmonic_pole(jet)
    h, hm = inv.fundamental_tensor(nj)
    res["apolarity"] = _rel(np.sum(nj.metric.g_inv * h), float(np.linalg.norm(h)))
    mu, mu_a = inv.mu_invariants(nj)

    if inv.is_umbilical(nj, tol=tol.umbilical):
        if nj.curvature.is_zero():
            umb_mu_a = np.zeros(nj.m)
        else:
            umb_mu_a = inv.umbilical_mu_a(nj)
        notes.append("umbilical point: mu = 0, higher invariants undefined")
        norm = NormalizationResult(h_ab=h, h_mixed=hm, mu=0.0, mu_a=umb_mu_a)
        return AnalysisReport(foci, pole, norm, UMBILICAL, None, res, tuple(notes))

    aff = inv.normalizing_affinor(nj, mu, threshold=tol.det_threshold, umbilical_tol=tol.umbilical)
    res["H_trace"] = _rel(np.trace(aff.H), float(np.linalg.norm(aff.H)))
    if aff.singular:
        notes.append("special-type hypersurface: H degenerate, invariant screen undefined")
        norm = NormalizationResult(h_ab=h, h_mixed=hm, mu=mu, mu_a=mu_a, H_mixed=aff.H)
        return AnalysisReport(foci, pole, norm, SPECIAL, None, res, tuple(notes))
    res["H_inverse"] = float(np.max(np.abs(aff.H @ aff.H_inv - np.eye(nj.m))))
    objs = inv.normalizing_objects(nj, mu, mu_a, aff.H_inv)

    fields_ = dict(h_ab=h, h_mixed=hm, mu=mu, mu_a=mu_a, H_mixed=aff.H, H_inv=aff.H_inv,
                   M_a=objs.M, N_a=objs.N, P_a=objs.P, Q_a=objs.Q)
    report = None
    try:
        report = conn.connection_report(nj, tol=tol)
    except conn.PreconditionError as exc:
        notes.append(f"connection skipped: {exc}")
    if report is not None:
        f = report.forms
        point = inv.invariant_point(nj, f.tau_ab)
        fields_.update(tau=point.tau, tau_ab=f.tau_ab, sigma_ab=f.sigma_ab, tau_a=f.tau_a,
                       sigma_a=f.sigma_a, Cn_coordinate=point.Cn_coordinate,
                       congruence_foci=point.congruence_foci)
        res["back_substitution"] = f.residual
        res["integrability_identity"] = report.integrability.identity_residual
        res["vieta_congruence"] = _rel(point.vieta_defect, float(np.linalg.norm(f.tau_ab)))
    return AnalysisReport(foci, pole, NormalizationResult(**fields_), REGULAR, report, res,
                          tuple(notes))
