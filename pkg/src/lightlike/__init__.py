"""Invariant normalization of lightlike hypersurfaces from pointwise jet data."""

from .cartan_test import CartanReport, characters
from .connection import (ConnectionReport, NormalizingForms, PreconditionError, connection_report,
                         g2_structure_check, solve_normalizing_forms)
from .flat_model import ModelSpec, SingularChartPoint, generate_jet, sample_point
from .gauge import GaugeParams, check_focus_invariance, check_weight, integrate_gauge_flow
from .invariants import (DegenerateError, SpecialTypeError, UmbilicalPointError, invariant_point,
                         normalizing_affinor, normalizing_objects, singular_points)
from .jet_model import CurvatureSlice, HypersurfaceJet, load_jet, save_jet, validate
from .pipeline import AnalysisReport, NormalizationResult, analyze
from .tensor_core import ScreenMetric, pencil_eigen
from .tolerances import DEFAULT, Tolerances

__version__ = "0.1.0"

__all__ = [
    "AnalysisReport", "CartanReport", "ConnectionReport", "CurvatureSlice", "DEFAULT",
    "DegenerateError", "GaugeParams", "HypersurfaceJet", "ModelSpec", "NormalizationResult",
    "NormalizingForms", "PreconditionError", "ScreenMetric", "SingularChartPoint",
    "SpecialTypeError", "Tolerances", "UmbilicalPointError", "analyze", "characters",
    "check_focus_invariance", "check_weight", "connection_report", "g2_structure_check",
    "generate_jet", "integrate_gauge_flow", "invariant_point", "load_jet", "normalizing_affinor",
    "normalizing_objects", "pencil_eigen", "sample_point", "save_jet", "singular_points",
    "solve_normalizing_forms", "validate",
]
