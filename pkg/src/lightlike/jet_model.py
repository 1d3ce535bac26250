"""Pointwise jet of a lightlike hypersurface in an adapted frame.

A :class:`HypersurfaceJet` holds the coefficients of orders two to five that
the invariant pipeline consumes.  Construction never raises on bad numbers:
call :func:`validate` to get a report of every violated symmetry, or use
:func:`load_jet`, which refuses inadmissible data.

On disk a jet is a UTF-8 JSON object tagged ``"schema": "ljet-1"``.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field, fields, replace
from functools import cached_property
from typing import Any

import jsonschema
import numpy as np

from .tensor_core import ScreenMetric, cubic_symmetry_defect, symmetrize, symmetrize_cubic
from .tolerances import DEFAULT

SCHEMA_TAG = "ljet-1"

CURVATURE_KEYS = ("C1_11a", "C1_1ab", "Cn_ab1", "Ca_b1c", "Ca_bce", "C_11a", "C_1ab")
REQUIRED_KEYS = (
    "schema", "n", "g", "lambda", "lambda3", "curvature",
    "nu", "nu_a", "nu_ab", "rho", "rho_a", "rho_ab",
)
OPTIONAL_KEYS = ("phi1", "phi_a", "harmonic_normalized")


class JetError(Exception):
    """Base class for jet input problems."""

    category = "jet"


class JetParseError(JetError):
    """The input is not valid JSON."""

    category = "parse"


class JetSchemaError(JetError):
    """The JSON does not follow the ljet-1 layout."""

    category = "schema"


class JetValidationError(JetError):
    """The data has the right layout but breaks a jet invariant."""

    category = "validation"

    def __init__(self, report: "ValidationReport"):
        self.report = report
        super().__init__("; ".join(str(v) for v in report.violations))


def _ro(a):
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class CurvatureSlice:
    """Weyl-tensor and conformal-curvature components entering the pipeline.

    ``C1_11a[a] = C^1_{11a}``, ``C1_1ab[a, b] = C^1_{1ab}``,
    ``Cn_ab1[a, b] = C^n_{ab1}``, ``Ca_b1c[a, b, c] = C^a_{b1c}``,
    ``Ca_bce[a, b, c, e] = C^a_{bce}``, ``C_11a[a] = C_{11a}`` and
    ``C_1ab[a, b] = C_{1ab}``.
    """

    C1_11a: np.ndarray
    C1_1ab: np.ndarray
    Cn_ab1: np.ndarray
    Ca_b1c: np.ndarray
    Ca_bce: np.ndarray
    C_11a: np.ndarray
    C_1ab: np.ndarray

    def __post_init__(self):
        for f in fields(self):
            object.__setattr__(self, f.name, _ro(getattr(self, f.name)))

    @classmethod
    def zeros(cls, m: int) -> "CurvatureSlice":
        return cls(
            np.zeros(m), np.zeros((m, m)), np.zeros((m, m)), np.zeros((m, m, m)),
            np.zeros((m, m, m, m)), np.zeros(m), np.zeros((m, m)),
        )

    def is_zero(self) -> bool:
        return all(not np.any(getattr(self, k)) for k in CURVATURE_KEYS)


@dataclass(frozen=True, eq=False)
class HypersurfaceJet:
    """Jet coefficients at one point; arrays use 0-based screen indices."""

    n: int
    g: np.ndarray
    lam: np.ndarray
    lam3: np.ndarray
    curvature: CurvatureSlice
    nu: float = 0.0
    nu_a: np.ndarray = None
    nu_ab: np.ndarray = None
    rho: float = 0.0
    rho_a: np.ndarray = None
    rho_ab: np.ndarray = None
    phi1: float | None = None
    phi_a: np.ndarray | None = None
    harmonic_normalized: bool = False

    def __post_init__(self):
        m = int(self.n) - 2
        object.__setattr__(self, "n", int(self.n))
        for name in ("g", "lam", "lam3"):
            object.__setattr__(self, name, _ro(getattr(self, name)))
        for name, shape in (("nu_a", (m,)), ("nu_ab", (m, m)), ("rho_a", (m,)), ("rho_ab", (m, m))):
            value = getattr(self, name)
            object.__setattr__(self, name, _ro(np.zeros(shape) if value is None else value))
        object.__setattr__(self, "nu", float(self.nu))
        object.__setattr__(self, "rho", float(self.rho))
        if self.phi1 is not None:
            object.__setattr__(self, "phi1", float(self.phi1))
        if self.phi_a is not None:
            object.__setattr__(self, "phi_a", _ro(self.phi_a))
        object.__setattr__(self, "harmonic_normalized", bool(self.harmonic_normalized))

    @property
    def m(self) -> int:
        return self.n - 2

    @cached_property
    def metric(self) -> ScreenMetric:
        return ScreenMetric.from_matrix(self.g)

    @property
    def has_fifth_order(self) -> bool:
        return self.phi1 is not None and self.phi_a is not None

    def replace(self, **changes) -> "HypersurfaceJet":
        return replace(self, **changes)


# -- validation ------------------------------------------------------------


@dataclass(frozen=True)
class Violation:
    invariant: str
    location: str
    magnitude: float

    def __str__(self):
        return f"{self.invariant} at {self.location}: {self.magnitude:.3e}"


@dataclass(frozen=True)
class ValidationReport:
    violations: tuple[Violation, ...] = field(default_factory=tuple)

    @property
    def ok(self) -> bool:
        return not self.violations

    def cites(self, invariant: str) -> bool:
        return any(v.invariant == invariant for v in self.violations)

    def get(self, invariant: str) -> Violation | None:
        for v in self.violations:
            if v.invariant == invariant:
                return v
        return None


def _scale(a) -> float:
    return max(1.0, float(np.max(np.abs(a)))) if np.size(a) else 1.0


def _worst_pair(a):
    d = np.abs(a - a.T)
    i, j = np.unravel_index(np.argmax(d), d.shape)
    return (int(i), int(j)), float(d[i, j])


def validate(jet: HypersurfaceJet, *, tol=DEFAULT) -> ValidationReport:
    """List every violated jet invariant; an empty report means admissible."""
    out: list[Violation] = []
    m = jet.m
    if jet.n < 4:
        out.append(Violation("dimension", "n", float(4 - jet.n)))
        return ValidationReport(tuple(out))

    c = jet.curvature
    shapes = {
        "g": (jet.g, (m, m)), "lambda": (jet.lam, (m, m)), "lambda3": (jet.lam3, (m, m, m)),
        "nu_a": (jet.nu_a, (m,)), "nu_ab": (jet.nu_ab, (m, m)),
        "rho_a": (jet.rho_a, (m,)), "rho_ab": (jet.rho_ab, (m, m)),
        "C1_11a": (c.C1_11a, (m,)), "C1_1ab": (c.C1_1ab, (m, m)), "Cn_ab1": (c.Cn_ab1, (m, m)),
        "Ca_b1c": (c.Ca_b1c, (m, m, m)), "Ca_bce": (c.Ca_bce, (m, m, m, m)),
        "C_11a": (c.C_11a, (m,)), "C_1ab": (c.C_1ab, (m, m)),
    }
    if jet.phi_a is not None:
        shapes["phi_a"] = (jet.phi_a, (m,))
    bad_shape = set()
    for name, (arr, shape) in shapes.items():
        if arr.shape != shape:
            out.append(Violation("shape", f"{name} {arr.shape} != {shape}", float("nan")))
            bad_shape.add(name)
        elif not np.all(np.isfinite(arr)):
            out.append(Violation("finite values", name, float("inf")))
            bad_shape.add(name)
    for name in ("nu", "rho") + (("phi1",) if jet.phi1 is not None else ()):
        if not np.isfinite(getattr(jet, name)):
            out.append(Violation("finite values", name, float("inf")))
    if (jet.phi1 is None) != (jet.phi_a is None):
        out.append(Violation("fifth-order pair", "phi1/phi_a", float("nan")))

    for name, arr in (("g", jet.g), ("lambda", jet.lam), ("nu_ab", jet.nu_ab),
                      ("rho_ab", jet.rho_ab), ("Cn_ab1", c.Cn_ab1)):
        if name in bad_shape or m == 0:
            continue
        (i, j), mag = _worst_pair(arr)
        if mag > tol.symmetry * _scale(arr):
            out.append(Violation(f"{name} symmetry", f"[{i},{j}]", mag))
    if "lambda3" not in bad_shape:
        mag = cubic_symmetry_defect(jet.lam3)
        if mag > tol.symmetry * _scale(jet.lam3):
            out.append(Violation("lambda3 symmetry", "index permutations", mag))

    metric_ok = False
    if "g" not in bad_shape:
        w = np.linalg.eigvalsh(symmetrize(jet.g))
        if w.size and w[0] <= 0:
            out.append(Violation("g positive definiteness", "smallest eigenvalue", float(w[0])))
        else:
            metric_ok = True
    if metric_ok:
        g_inv = np.linalg.inv(symmetrize(jet.g))
        if "Cn_ab1" not in bad_shape:
            tr = float(np.sum(g_inv * c.Cn_ab1))
            if abs(tr) > tol.trace_condition * _scale(c.Cn_ab1):
                out.append(Violation("trace condition", "g^ab Cn_ab1", abs(tr)))
        if jet.harmonic_normalized and "lambda" not in bad_shape:
            tr = float(np.sum(g_inv * jet.lam)) / m
            if abs(tr) > tol.trace_condition * _scale(jet.lam):
                out.append(Violation("harmonic normalization", "mean eigenvalue", abs(tr)))
    return ValidationReport(tuple(out))


# -- harmonic pole -----------------------------------------------------------


def mean_eigenvalue(jet: HypersurfaceJet) -> float:
    """Coordinate of the harmonic pole, ``(1/m) g^{ab} lambda_ab``."""
    return float(np.sum(jet.metric.g_inv * jet.lam)) / jet.m


def normalize_to_harmonic_pole(jet: HypersurfaceJet) -> HypersurfaceJet:
    """Move ``A_1`` to the harmonic pole: ``lambda_ab -> lambda_ab - lambda g_ab``."""
    if jet.harmonic_normalized:
        return jet
    lam_mean = mean_eigenvalue(jet)
    return jet.replace(lam=jet.lam - lam_mean * jet.g, harmonic_normalized=True)


# -- JSON ------------------------------------------------------------------

_NUM = {"type": "number"}
_ARRAY = {"type": "array"}
JSON_SCHEMA: dict[str, Any] = {
    "type": "object",
    "required": list(REQUIRED_KEYS),
    "additionalProperties": False,
    "properties": {
        "schema": {"const": SCHEMA_TAG},
        "n": {"type": "integer", "minimum": 4},
        "g": _ARRAY, "lambda": _ARRAY, "lambda3": _ARRAY,
        "curvature": {
            "type": "object",
            "required": list(CURVATURE_KEYS),
            "additionalProperties": False,
            "properties": {k: _ARRAY for k in CURVATURE_KEYS},
        },
        "nu": _NUM, "nu_a": _ARRAY, "nu_ab": _ARRAY,
        "rho": _NUM, "rho_a": _ARRAY, "rho_ab": _ARRAY,
        "phi1": _NUM, "phi_a": _ARRAY,
        "harmonic_normalized": {"type": "boolean"},
    },
}


def _array(value, path: str, ndim: int, m: int) -> np.ndarray:
    def check(v, depth, where):
        if depth == 0:
            if isinstance(v, bool) or not isinstance(v, (int, float)):
                raise JetSchemaError(f"{where}: expected a number")
            return
        if not isinstance(v, list) or len(v) != m:
            raise JetSchemaError(f"{where}: expected a list of length {m}")
        for i, item in enumerate(v):
            check(item, depth - 1, f"{where}[{i}]")

    check(value, ndim, path)
    return np.array(value, dtype=float).reshape((m,) * ndim)


def jet_from_dict(data: dict) -> HypersurfaceJet:
    """Build a jet from parsed JSON, raising :class:`JetSchemaError` on layout errors."""
    try:
        jsonschema.validate(data, JSON_SCHEMA)
    except jsonschema.ValidationError as exc:
        where = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise JetSchemaError(f"{where}: {exc.message}") from None
    n = int(data["n"])
    m = n - 2
    cd = data["curvature"]
    dims = {"C1_11a": 1, "C1_1ab": 2, "Cn_ab1": 2, "Ca_b1c": 3, "Ca_bce": 4, "C_11a": 1, "C_1ab": 2}
    curvature = CurvatureSlice(**{k: _array(cd[k], f"curvature/{k}", dims[k], m) for k in CURVATURE_KEYS})
    has_phi1, has_phi_a = "phi1" in data, "phi_a" in data
    if has_phi1 != has_phi_a:
        raise JetSchemaError("phi1 and phi_a must be given together")
    return HypersurfaceJet(
        n=n,
        g=_array(data["g"], "g", 2, m),
        lam=_array(data["lambda"], "lambda", 2, m),
        lam3=_array(data["lambda3"], "lambda3", 3, m),
        curvature=curvature,
        nu=data["nu"],
        nu_a=_array(data["nu_a"], "nu_a", 1, m),
        nu_ab=_array(data["nu_ab"], "nu_ab", 2, m),
        rho=data["rho"],
        rho_a=_array(data["rho_a"], "rho_a", 1, m),
        rho_ab=_array(data["rho_ab"], "rho_ab", 2, m),
        phi1=data.get("phi1"),
        phi_a=_array(data["phi_a"], "phi_a", 1, m) if has_phi_a else None,
        harmonic_normalized=data.get("harmonic_normalized", False),
    )


def jet_to_dict(jet: HypersurfaceJet) -> dict:
    c = jet.curvature
    out = {
        "schema": SCHEMA_TAG,
        "n": jet.n,
        "g": jet.g.tolist(),
        "lambda": jet.lam.tolist(),
        "lambda3": jet.lam3.tolist(),
        "curvature": {k: getattr(c, k).tolist() for k in CURVATURE_KEYS},
        "nu": jet.nu,
        "nu_a": jet.nu_a.tolist(),
        "nu_ab": jet.nu_ab.tolist(),
        "rho": jet.rho,
        "rho_a": jet.rho_a.tolist(),
        "rho_ab": jet.rho_ab.tolist(),
    }
    if jet.has_fifth_order:
        out["phi1"] = jet.phi1
        out["phi_a"] = jet.phi_a.tolist()
    out["harmonic_normalized"] = jet.harmonic_normalized
    return out


def dumps_jet(jet: HypersurfaceJet) -> str:
    return json.dumps(jet_to_dict(jet), allow_nan=False) + "\n"


def loads_jet(text: str, *, check=True, tol=DEFAULT) -> HypersurfaceJet:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise JetParseError(f"invalid JSON: {exc}") from None
    jet = jet_from_dict(data)
    if check:
        report = validate(jet, tol=tol)
        if not report.ok:
            raise JetValidationError(report)
    return jet


def load_jet(source, *, check=True, tol=DEFAULT) -> HypersurfaceJet:
    """Read a jet from a path or a text stream; validates unless ``check=False``."""
    if isinstance(source, (str, os.PathLike)):
        with open(source, encoding="utf-8") as fh:
            text = fh.read()
    else:
        text = source.read()
    return loads_jet(text, check=check, tol=tol)


def save_jet(jet: HypersurfaceJet, target) -> None:
    text = dumps_jet(jet)
    if isinstance(target, (str, os.PathLike)):
        with open(target, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        target.write(text)


# -- random admissible jets ---------------------------------------------------


def random_spd(rng, m, spread=1.0):
    a = rng.normal(size=(m, m))
    return symmetrize(spread * a @ a.T / m + np.eye(m))


def trace_free_cubic(g_inv, t):
    """Remove the g-trace of a symmetric cubic array."""
    m = t.shape[0]
    g = np.linalg.inv(g_inv)
    w = np.einsum("ab,abc->c", g_inv, t) / (m + 2)
    corr = np.einsum("ab,c->abc", g, w)
    corr = corr + np.transpose(corr, (1, 2, 0)) + np.transpose(corr, (2, 0, 1))
    return t - corr


def random_jet(
    rng,
    m: int,
    *,
    normalized=True,
    reduced=False,
    conformally_flat=False,
    with_phi=False,
    identity_metric=False,
) -> HypersurfaceJet:
    """A random admissible jet for tests and demos.

    ``reduced`` makes ``mu_a = nu_a = 0`` (the frame where the screen is the
    invariant one); ``conformally_flat`` zeroes the curvature slice.
    """
    g = np.eye(m) if identity_metric else random_spd(rng, m)
    g_inv = np.linalg.inv(g)
    lam = symmetrize(rng.normal(size=(m, m)))
    if normalized:
        lam = lam - (np.sum(g_inv * lam) / m) * g
    lam3 = symmetrize_cubic(rng.normal(size=(m, m, m)))
    if reduced:
        lam3 = trace_free_cubic(g_inv, lam3)
    if conformally_flat:
        curvature = CurvatureSlice.zeros(m)
    else:
        cn = symmetrize(rng.normal(size=(m, m)))
        cn = cn - (np.sum(g_inv * cn) / m) * g
        c11 = rng.normal(size=(m, m))
        curvature = CurvatureSlice(
            C1_11a=rng.normal(size=m),
            C1_1ab=0.5 * (c11 - c11.T),
            Cn_ab1=cn,
            Ca_b1c=rng.normal(size=(m, m, m)),
            Ca_bce=(lambda t: 0.5 * (t - np.swapaxes(t, 2, 3)))(rng.normal(size=(m, m, m, m))),
            C_11a=rng.normal(size=m),
            C_1ab=rng.normal(size=(m, m)),
        )
    return HypersurfaceJet(
        n=m + 2,
        g=g,
        lam=symmetrize(lam),
        lam3=lam3,
        curvature=curvature,
        nu=float(rng.normal()),
        nu_a=np.zeros(m) if reduced else rng.normal(size=m),
        nu_ab=symmetrize(rng.normal(size=(m, m))),
        rho=float(rng.normal()),
        rho_a=rng.normal(size=m),
        rho_ab=symmetrize(rng.normal(size=(m, m))),
        phi1=float(rng.normal()) if with_phi else None,
        phi_a=rng.normal(size=m) if with_phi else None,
        harmonic_normalized=normalized,
    )
