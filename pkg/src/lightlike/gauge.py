"""Infinitesimal frame changes acting on jet quantities.

A frame change that keeps ``A_0`` projectively fixed is generated by
constant values of the fiber forms

    pi00 = pi_0^0, pi11 = pi_1^1, pi01 = pi_1^0 (shift of A_1 along the ruling),
    pi_ab[a, b] = pi^a_b, pi_a0[a] = pi_a^0, pi_a1[a] = pi_a^1, pi_n0 = pi_n^0.

Every quantity then obeys a first-order law ``dX/dt = L(X)``.  The laws are
coupled through products such as ``mu H`` and ``h g^-1``, so they are
integrated together with fixed-step RK4.  Afterwards the derived quantities
are recomputed from the flowed primitive ones; agreement is the check that
the laws are mutually consistent.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from . import invariants as inv
from .jet_model import HypersurfaceJet
from .tensor_core import pencil_eigen, symmetrize
from .tolerances import DEFAULT

MIN_STEPS = 100


@dataclass(frozen=True)
class GaugeParams:
    pi00: float = 0.0
    pi11: float = 0.0
    pi01: float = 0.0
    pi_ab: np.ndarray | None = None
    pi_a0: np.ndarray | None = None
    pi_a1: np.ndarray | None = None
    pi_n0: float = 0.0

    def full(self, m: int) -> "GaugeParams":
        def arr(x, shape):
            x = np.zeros(shape) if x is None else np.asarray(x, dtype=float)
            if x.shape != shape:
                raise ValueError(f"gauge parameter has shape {x.shape}, expected {shape}")
            return x
        return GaugeParams(float(self.pi00), float(self.pi11), float(self.pi01),
                           arr(self.pi_ab, (m, m)), arr(self.pi_a0, (m,)), arr(self.pi_a1, (m,)),
                           float(self.pi_n0))

    @classmethod
    def from_dict(cls, d: dict) -> "GaugeParams":
        known = {"pi00", "pi11", "pi01", "pi_ab", "pi_a0", "pi_a1", "pi_n0"}
        extra = set(d) - known
        if extra:
            raise ValueError(f"unknown gauge parameters: {sorted(extra)}")
        return cls(**{k: (np.asarray(v, dtype=float) if isinstance(v, list) else v)
                      for k, v in d.items()})

    def to_dict(self) -> dict:
        out = {}
        for k in ("pi00", "pi11", "pi01", "pi_ab", "pi_a0", "pi_a1", "pi_n0"):
            v = getattr(self, k)
            if v is not None:
                out[k] = np.asarray(v).tolist() if isinstance(v, np.ndarray) else float(v)
        return out

    @classmethod
    def random(cls, rng, m: int, scale=0.3) -> "GaugeParams":
        r = lambda *s: scale * rng.normal(size=s)  # noqa: E731
        return cls(float(r()), float(r()), float(r()), r(m, m), r(m), r(m), float(r()))


@dataclass(frozen=True)
class FlowResult:
    t: float
    steps: int
    quantities: dict
    residuals: dict = field(default_factory=dict)

    def max_residual(self) -> float:
        return max(self.residuals.values(), default=0.0)


# -- state ----------------------------------------------------------------------------


def initial_state(jet: HypersurfaceJet, *, tol=DEFAULT) -> dict:
    """Quantities the jet determines, keyed by name.

    ``H`` needs ``mu > 0``; ``H_inv, M, N, P, Q`` need a nondegenerate
    ``H``; ``tau, tau_a, tau_ab, z`` need the normalizing forms (reduced,
    harmonic-normalized jet).  Missing ones are simply absent.
    """
    from . import connection as conn

    h, _ = inv.fundamental_tensor(jet)
    lm = jet.metric.g_inv @ h
    mu = float(np.trace(lm @ lm)) / jet.m
    _, mu_a = inv.mu_invariants(jet)
    st = {
        "g": np.array(jet.g), "lam": np.array(jet.lam),
        "lam_mean": float(np.sum(jet.metric.g_inv * jet.lam)) / jet.m,
        "h": h, "mu": mu, "mu_a": np.array(mu_a), "nu": jet.nu, "nu_a": np.array(jet.nu_a),
    }
    if inv.is_umbilical(jet, tol=tol.umbilical):
        return st
    aff = inv.normalizing_affinor(jet, mu, threshold=tol.det_threshold)
    st["H"] = aff.H
    if not aff.singular:
        objs = inv.normalizing_objects(jet, mu, mu_a, aff.H_inv)
        st.update(H_inv=aff.H_inv, M=objs.M, N=objs.N, P=objs.P, Q=objs.Q,
                  y_screen=objs.P.copy(), z_screen=-objs.Q)
        try:
            forms = conn.solve_normalizing_forms(jet, tol=tol)
        except conn.PreconditionError:
            return st
        point = inv.invariant_point(jet, forms.tau_ab)
        st.update(tau_a=np.array(forms.tau_a), tau_ab=np.array(forms.tau_ab),
                  tau=point.tau, z=-point.tau)
    return st


class _Layout:
    def __init__(self, state: dict):
        self.names = list(state)
        self.shapes = {k: np.shape(state[k]) for k in self.names}
        self.slices = {}
        i = 0
        for k in self.names:
            size = int(np.prod(self.shapes[k], dtype=int))
            self.slices[k] = slice(i, i + size)
            i += size
        self.size = i

    def pack(self, state: dict) -> np.ndarray:
        out = np.empty(self.size)
        for k in self.names:
            out[self.slices[k]] = np.ravel(state[k])
        return out

    def unpack(self, x: np.ndarray) -> dict:
        out = {}
        for k in self.names:
            v = x[self.slices[k]].reshape(self.shapes[k])
            out[k] = float(v) if v.shape == () else v
        return out


def rates(state: dict, p: GaugeParams) -> dict:
    """Right-hand sides of the transformation laws."""
    a, b, s = p.pi00, p.pi11, p.pi01
    Pi, y, z1, q = p.pi_ab, p.pi_a0, p.pi_a1, p.pi_n0
    PiT = Pi.T
    g, h, mu, nu = state["g"], state["h"], state["mu"], state["nu"]
    m = g.shape[0]
    K = h @ np.linalg.inv(g)
    out = {
        "g": PiT @ g + g @ Pi,
        "lam": PiT @ state["lam"] + state["lam"] @ Pi + (b - a) * state["lam"] + s * g,
        "lam_mean": (b - a) * state["lam_mean"] + s,
        "h": PiT @ h + h @ Pi + (b - a) * h,
        "mu": 2 * (b - a) * mu,
        "mu_a": PiT @ state["mu_a"] - a * state["mu_a"] - (a - b) * state["mu_a"] - K @ y + mu * z1,
        "nu": 3 * (b - a) * nu,
        "nu_a": (PiT @ state["nu_a"] - a * state["nu_a"] - 2 * (a - b) * state["nu_a"]
                 - 2 * mu * y + (2 * mu * K + nu * np.eye(m)) @ z1),
    }
    if "H" in state:
        H = state["H"]
        out["H"] = H @ Pi - Pi @ H + 2 * (b - a) * H
    if "H_inv" in state:
        Ht = state["H_inv"]
        out["H_inv"] = Ht @ Pi - Pi @ Ht - 2 * (b - a) * Ht
        M, N = state["M"], state["N"]
        out["M"] = PiT @ M - a * M - 2 * (a - b) * M - H.T @ y
        out["N"] = PiT @ N - a * N - 3 * (a - b) * N + mu * H.T @ z1
        out["P"] = PiT @ state["P"] - a * state["P"] - y
        # Q = Ht N / mu inherits +pi_a^1 from the N law
        out["Q"] = PiT @ state["Q"] - a * state["Q"] - (b - a) * state["Q"] + z1
    if "y_screen" in state:
        # invariance conditions for C_a = A_a + y_a A_0 + z_a A_1
        out["y_screen"] = PiT @ state["y_screen"] - a * state["y_screen"] - y
        zs = state["z_screen"]
        out["z_screen"] = PiT @ zs - a * zs - (b - a) * zs - z1
    if "tau_ab" in state:
        T = state["tau_ab"]
        out["tau_a"] = PiT @ state["tau_a"] - a * state["tau_a"]
        out["tau_ab"] = PiT @ T + T @ Pi - (a + b) * T + q * g
        out["tau"] = -(a + b) * state["tau"] + q
        out["z"] = -(a + b) * state["z"] - q
    return out


def _flow(state: dict, params: GaugeParams, t: float, steps: int, samples: int = 0):
    if steps < MIN_STEPS:
        raise ValueError(f"at least {MIN_STEPS} steps required, got {steps}")
    dt = t / steps
    if t != 0 and abs(dt) < 1e-14 * max(1.0, abs(t)):
        raise ArithmeticError("step underflow in gauge flow")
    lay = _Layout(state)

    def f(x):
        return lay.pack(rates(lay.unpack(x), params))

    x = lay.pack(state)
    record = []
    every = steps // samples if samples else 0
    for k in range(steps):
        k1 = f(x)
        k2 = f(x + 0.5 * dt * k1)
        k3 = f(x + 0.5 * dt * k2)
        k4 = f(x + dt * k3)
        x = x + dt / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
        if every and (k + 1) % every == 0:
            record.append(((k + 1) * dt, lay.unpack(x.copy())))
    return lay.unpack(x), record


def _rel(a, b) -> float:
    a, b = np.asarray(a), np.asarray(b)
    return float(np.linalg.norm(a - b) / max(1.0, np.linalg.norm(b)))


def law_residuals(st: dict) -> dict:
    """Compare flowed derived quantities with their recomputation from flowed primitives."""
    g = symmetrize(st["g"])
    g_inv = np.linalg.inv(g)
    m = g.shape[0]
    lam_mean = float(np.sum(g_inv * st["lam"])) / m
    h = st["lam"] - lam_mean * g
    hm = g_inv @ st["h"]
    K = st["h"] @ g_inv
    mu = float(np.trace(hm @ hm)) / m
    res = {
        "lambda_mean": _rel(st["lam_mean"], lam_mean),
        "h_covariance": _rel(st["h"], h),
        "mu": _rel(st["mu"], mu),
    }
    if "H" in st:
        k = st["nu"] / (2 * st["mu"])
        res["H"] = _rel(st["H"], hm @ hm + k * hm - st["mu"] * np.eye(m))
    if "H_inv" in st:
        res["H_inv"] = float(np.max(np.abs(st["H"] @ st["H_inv"] - np.eye(m))))
        M = K @ st["mu_a"] + st["nu"] / (2 * st["mu"]) * st["mu_a"] - 0.5 * st["nu_a"]
        N = 0.5 * K @ st["nu_a"] - st["mu"] * st["mu_a"]
        res["M"] = _rel(st["M"], M)
        res["N"] = _rel(st["N"], N)
        Ht = np.linalg.inv(st["H"])
        res["P"] = _rel(st["P"], Ht.T @ st["M"])
        res["Q"] = _rel(st["Q"], Ht.T @ st["N"] / st["mu"])
        # the screen built from the flowed objects stays a solution of the
        # invariance conditions, integrated on their own
        res["screen_invariance"] = max(_rel(st["y_screen"], Ht.T @ st["M"]),
                                       _rel(st["z_screen"], -Ht.T @ st["N"] / st["mu"]))
    if "tau_ab" in st:
        res["tau"] = _rel(st["tau"], float(np.sum(g_inv * st["tau_ab"])) / m)
        res["Cn_invariance"] = _rel(st["z"], -st["tau"])
    return res


def integrate_gauge_flow(jet: HypersurfaceJet, params: GaugeParams, t: float, steps: int = 1000,
                         *, tol=DEFAULT) -> FlowResult:
    """Flow every available jet quantity for time ``t`` under constant ``params``."""
    params = params.full(jet.m)
    st, _ = _flow(initial_state(jet, tol=tol), params, t, steps)
    st = dict(st)
    st["foci"] = np.linalg.eigvals(np.linalg.solve(st["g"], st["lam"])).real
    st["foci"].sort()
    if "tau_ab" in st:
        st["congruence_foci"] = np.sort_complex(
            np.linalg.eigvals(-np.linalg.solve(st["g"], st["tau_ab"])).astype(complex))
    return FlowResult(t=t, steps=steps, quantities=st, residuals=law_residuals(st))


def composition_residual(jet: HypersurfaceJet, params: GaugeParams, t1: float, t2: float,
                         steps: int = 1000, *, tol=DEFAULT) -> float:
    """Largest relative gap between ``flow(t1 + t2)`` and ``flow(t2) o flow(t1)``."""
    params = params.full(jet.m)
    st0 = initial_state(jet, tol=tol)
    direct, _ = _flow(st0, params, t1 + t2, steps)
    mid, _ = _flow(st0, params, t1, steps)
    composed, _ = _flow(mid, params, t2, steps)
    return max(_rel(direct[k], composed[k]) for k in direct)


# -- foci ---------------------------------------------------------------------------


def check_focus_invariance(jet: HypersurfaceJet, params: GaugeParams, t: float,
                           steps: int = 1000) -> float:
    """Projective drift of the foci ``F_a = A_1 - s_a A_0`` under a frame change.

    Only the normalisation of ``A_0, A_1`` may move.  The frame obeys
    ``dA_0 = pi00 A_0`` and ``dA_1 = pi01 A_0 + pi11 A_1``; ``s_a`` come from
    the flowed ``lambda_ab``.  Returns the largest sine of the angle between
    ``F_a(t)`` and ``F_a(0)`` in the plane spanned by ``A_0, A_1``.
    """
    p = params.full(jet.m)
    if np.any(p.pi_ab) or np.any(p.pi_a0) or np.any(p.pi_a1) or p.pi_n0:
        raise ValueError("focus invariance needs a change of A_0, A_1 only")
    s0, _ = pencil_eigen(jet.metric, jet.lam)
    flowed = _flow_lambda(jet, p, t, steps)
    st1, _ = pencil_eigen(jet.metric, flowed)
    E = scipy.linalg.expm(t * np.array([[p.pi00, p.pi01], [0.0, p.pi11]]))
    worst = 0.0
    for a, b in zip(s0, st1):
        f0 = np.array([-a, 1.0])
        ft = E[:, 1] - b * E[:, 0]
        worst = max(worst, abs(f0[0] * ft[1] - f0[1] * ft[0]) / (np.linalg.norm(f0) * np.linalg.norm(ft)))
    return float(worst)


def _flow_lambda(jet, p, t, steps):
    st = {"g": np.array(jet.g), "lam": np.array(jet.lam), "lam_mean": 0.0,
          "h": np.zeros_like(jet.g), "mu": 0.0, "mu_a": np.zeros(jet.m), "nu": 0.0,
          "nu_a": np.zeros(jet.m)}
    out, _ = _flow(st, p, t, steps)
    return out["lam"]


# -- weights ------------------------------------------------------------------------

# name -> (state key, reference combination, expected weight, lower minus upper indices)
WEIGHTS = {
    "mu": ("mu", "b-a", 2.0, 0),
    "nu": ("nu", "b-a", 3.0, 0),
    "H": ("H", "b-a", 2.0, 0),
    "H_inv": ("H_inv", "b-a", -2.0, 0),
    "tau_a": ("tau_a", "b-a", 0.0, 1),
    "tau_ab": ("tau_ab", "b-a", -1.0, 2),
    "h_ab": ("h", "a+b", 1.0, 2),
    "tau": ("tau", "a+b", -1.0, 0),
}
ALIASES = {"H_tilde": "H_inv", "Htilde": "H_inv", "h": "h_ab"}


@dataclass(frozen=True)
class WeightMeasurement:
    name: str
    weight: float
    expected: float
    rate: float
    fit_residual: float

    @property
    def error(self) -> float:
        return abs(self.weight - self.expected)


def check_weight(name: str, jet: HypersurfaceJet, params: GaugeParams, t: float = 1.0,
                 steps: int = 1000, samples: int = 10, *, tol=DEFAULT) -> WeightMeasurement:
    """Measure the weight of a relative invariant from its growth along a flow.

    Only ``pi00`` and ``pi11`` of ``params`` are used.  The growth rate of
    ``log |X|`` is fitted by least squares; each net lower screen index
    contributes ``pi00`` to the rate through the normalisation of ``A_a``,
    which is added back before dividing by the reference combination
    (``pi11 - pi00`` or ``pi11 + pi00``).
    """
    name = ALIASES.get(name, name)
    if name not in WEIGHTS:
        raise KeyError(f"unknown quantity {name!r}; expected one of {sorted(WEIGHTS)}")
    key, ref_kind, expected, net_lower = WEIGHTS[name]
    a, b = float(params.pi00), float(params.pi11)
    ref = (b - a) if ref_kind == "b-a" else (a + b)
    if abs(ref) < 1e-12:
        raise ValueError(f"reference combination {ref_kind} vanishes for these parameters")
    p = GaugeParams(pi00=a, pi11=b).full(jet.m)
    st0 = initial_state(jet, tol=tol)
    if key not in st0:
        raise ValueError(f"quantity {name!r} is not defined for this jet")
    if not np.linalg.norm(st0[key]) > 0:
        raise ValueError(f"quantity {name!r} vanishes; its weight is not measurable")
    _, record = _flow(st0, p, t, steps, samples)
    ts = np.array([0.0] + [r[0] for r in record])
    vals = np.array([np.log(np.linalg.norm(st0[key]))]
                    + [np.log(np.linalg.norm(r[1][key])) for r in record])
    A = np.column_stack([np.ones_like(ts), ts])
    coef, *_ = np.linalg.lstsq(A, vals, rcond=None)
    fit = float(np.max(np.abs(A @ coef - vals)))
    rate = float(coef[1])
    return WeightMeasurement(name=name, weight=(rate + net_lower * a) / ref, expected=expected,
                             rate=rate, fit_residual=fit)
