"""Lightlike hypersurfaces of flat Minkowski space as ground truth.

Minkowski space ``R^n_1`` (metric ``eta = diag(-1, 1, ..., 1)``) is lifted
to the quadric of ``R^{n+2}`` with the form

    B(X, Y) = eta(x, y) - u_X v_Y - v_X u_Y,        X = (x, u, v),

of signature ``(n, 2)``.  A point lifts to ``P(x) = (x, 1, eta(x, x)/2)``
and a tangent vector to ``dP(xi) = (xi, 0, eta(x, xi))``.

A null-ruled hypersurface is swept by the outward null normals of a
spacelike base surface in the hyperplane ``x^0 = time``:

    x(u, t) = S(u) + t l(u),     l = (1, N(u)),

where ``S = center + axes * s(u)`` is a hyperellipsoid over hyperspherical
angles ``u`` and ``N`` its unit outward normal.  Equal axes give a round
sphere, whose normal rays all meet in one point, so the same construction
with equal axes is the null cone of that vertex.

Parameters of a point are ``p = (t, u_1, ..., u_m)``; column ``k`` of every
derivative array is the direction ``d/dp_k``.  Frame rows are ordered
``A_0, A_1, A_2 .. A_{n-1}, A_n, A_{n+1}``.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .jet_model import CurvatureSlice, HypersurfaceJet
from .tensor_core import symmetrize, symmetrize_cubic

NULL_CONE = "null-cone"
NULL_RULED = "null-ruled"
VARIANTS = (NULL_CONE, NULL_RULED)

# central stencils: offsets and weights (divide by h)
_STENCILS = {
    2: (np.array([-1.0, 1.0]), np.array([-0.5, 0.5])),
    4: (np.array([-2.0, -1.0, 1.0, 2.0]), np.array([1.0, -8.0, 8.0, -1.0]) / 12.0),
}


class SingularChartPoint(ValueError):
    """The requested point is a coordinate pole, the cone vertex or a caustic."""


@dataclass(frozen=True)
class ModelSpec:
    """A flat model hypersurface.

    ``axes`` are the ``n - 1`` semi-axes of the base, ``center`` its spatial
    centre and ``time`` the time of its slice.  For the cone the vertex is
    ``(time - r, center)`` with ``r`` the common axis.
    """

    variant: str
    n: int
    axes: tuple
    center: tuple = None
    time: float = 0.0
    h_fd: float = 1e-4
    h_nested: float = 1e-2
    chart_margin: float = 1e-3

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise ValueError(f"variant must be one of {VARIANTS}, got {self.variant!r}")
        if int(self.n) != self.n or self.n < 4:
            raise ValueError(f"n must be an integer >= 4, got {self.n}")
        object.__setattr__(self, "n", int(self.n))
        axes = tuple(float(a) for a in np.broadcast_to(np.asarray(self.axes, float), (self.n - 1,)))
        if min(axes) <= 0:
            raise ValueError("axes must be positive")
        if self.variant == NULL_CONE and max(axes) - min(axes) > 1e-12 * max(axes):
            raise ValueError("a null cone needs equal axes")
        object.__setattr__(self, "axes", axes)
        center = (0.0,) * (self.n - 1) if self.center is None else tuple(float(c) for c in self.center)
        if len(center) != self.n - 1:
            raise ValueError(f"center needs {self.n - 1} entries")
        object.__setattr__(self, "center", center)
        for name in ("h_fd", "h_nested", "chart_margin"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")

    @property
    def m(self) -> int:
        return self.n - 2

    @classmethod
    def cone(cls, n, vertex=None, radius=1.0, **kw) -> "ModelSpec":
        vertex = np.zeros(n) if vertex is None else np.asarray(vertex, float)
        return cls(NULL_CONE, n, (radius,) * (n - 1), center=tuple(vertex[1:]),
                   time=float(vertex[0]) + radius, **kw)

    @classmethod
    def sphere(cls, n, radius=1.0, **kw) -> "ModelSpec":
        return cls(NULL_RULED, n, (radius,) * (n - 1), **kw)

    @classmethod
    def ellipsoid(cls, axes, **kw) -> "ModelSpec":
        return cls(NULL_RULED, len(axes) + 1, tuple(axes), **kw)

    @property
    def vertex(self):
        if self.variant != NULL_CONE:
            return None
        return np.concatenate([[self.time - self.axes[0]], self.center])

    @classmethod
    def from_dict(cls, d: dict) -> "ModelSpec":
        d = dict(d)
        variant = d.pop("variant")
        if "axes" in d:
            # full form, as written by to_dict
            if "n" not in d:
                d["n"] = len(d["axes"]) + 1
            return cls(variant, **d)
        if variant == NULL_CONE:
            n = d.pop("n")
            return cls.cone(n, d.pop("vertex", None), d.pop("radius", 1.0), **d)
        if "radius" in d:
            n = d.pop("n")
            return cls.sphere(n, d.pop("radius"), **d)
        raise ValueError("model spec needs 'axes', or 'radius' (sphere) or a null-cone variant")

    def to_dict(self) -> dict:
        return {"variant": self.variant, "n": self.n, "axes": list(self.axes),
                "center": list(self.center), "time": self.time, "h_fd": self.h_fd,
                "h_nested": self.h_nested, "chart_margin": self.chart_margin}


# -- geometry of the base -------------------------------------------------------


def hyperspherical(u):
    """Unit vectors of ``R^{m+1}`` from angles ``u`` (last axis, length ``m``)."""
    u = np.asarray(u, float)
    m = u.shape[-1]
    out = np.empty(u.shape[:-1] + (m + 1,))
    prod = np.ones(u.shape[:-1])
    for k in range(m):
        out[..., k] = prod * np.cos(u[..., k])
        prod = prod * np.sin(u[..., k])
    out[..., m] = prod
    return out


def eta(x, y):
    return -x[..., 0] * y[..., 0] + np.sum(x[..., 1:] * y[..., 1:], axis=-1)


def ambient_form(n: int) -> np.ndarray:
    G = np.diag([-1.0] + [1.0] * (n - 1) + [0.0, 0.0])
    G[n, n + 1] = G[n + 1, n] = -1.0
    return G


def lift(x):
    x = np.asarray(x, float)
    return np.concatenate([x, np.ones(x.shape[:-1] + (1,)), 0.5 * eta(x, x)[..., None]], axis=-1)


def lift_tangent(x, xi):
    xi = np.asarray(xi, float)
    return np.concatenate([xi, np.zeros(xi.shape[:-1] + (1,)), eta(x, xi)[..., None]], axis=-1)


def _spatial_normal(spec: ModelSpec, s):
    w = s / np.asarray(spec.axes)
    return w / np.linalg.norm(w, axis=-1, keepdims=True)


def ruling(spec: ModelSpec, u):
    """Null direction ``l(u) = (1, N(u))``."""
    N = _spatial_normal(spec, hyperspherical(u))
    return np.concatenate([np.ones(N.shape[:-1] + (1,)), N], axis=-1)


def surface_point(spec: ModelSpec, p):
    """``x(u, t)`` for parameters ``p = (t, u)`` (last axis)."""
    p = np.asarray(p, float)
    t, u = p[..., 0], p[..., 1:]
    s = hyperspherical(u)
    S = np.asarray(spec.center) + np.asarray(spec.axes) * s
    base = np.concatenate([np.full(S.shape[:-1] + (1,), spec.time), S], axis=-1)
    return base + t[..., None] * ruling(spec, u)


# -- finite differences ----------------------------------------------------------


def stencil_derivative(f, p, h, order=4):
    """Central differences of ``f`` along every coordinate of the points ``p``.

    ``f`` maps an array of points ``(K, d)`` to values ``(K, ...)``; the
    result has shape ``(K, d, ...)``.  All stencil points are evaluated in
    one batched call.
    """
    p = np.atleast_2d(np.asarray(p, float))
    K, d = p.shape
    offsets, weights = _STENCILS[order]
    pts = p[:, None, None, :] + h * offsets[None, None, :, None] * np.eye(d)[None, :, None, :]
    vals = np.asarray(f(pts.reshape(-1, d)))
    vals = vals.reshape((K, d, len(offsets)) + vals.shape[1:])
    return np.einsum("kds...,s->kd...", vals, weights) / h


def _tangents(spec: ModelSpec, p, h, order):
    """``e_a = dx/du^a`` and ``dl/du^a`` by central differences, shape ``(K, m, n)``."""
    m = spec.m
    p = np.atleast_2d(p)
    offsets, weights = _STENCILS[order]
    K = p.shape[0]
    shift = np.zeros((m, len(offsets), m + 1))
    for a in range(m):
        shift[a, :, a + 1] = h * offsets
    pts = p[:, None, None, :] + shift[None]
    x = surface_point(spec, pts)
    l = ruling(spec, pts[..., 1:])
    e = np.einsum("kasi,s->kai", x, weights) / h
    dl = np.einsum("kasi,s->kai", l, weights) / h
    return e, dl


# -- the adapted frame -------------------------------------------------------------


@dataclass(frozen=True)
class AdaptedFrame:
    """Frame vectors as rows, plus the screen data read off with them."""

    n: int
    vectors: np.ndarray     # (n+2, n+2)
    g: np.ndarray
    lam: np.ndarray         # lambda_ab in this frame
    lam_mean: float
    harmonic: bool

    @property
    def A0(self):
        return self.vectors[0]

    @property
    def A1(self):
        return self.vectors[1]

    @property
    def screen(self):
        return self.vectors[2:self.n]

    @property
    def An(self):
        return self.vectors[self.n]

    @property
    def An1(self):
        return self.vectors[self.n + 1]

    def gram(self) -> np.ndarray:
        return self.vectors @ ambient_form(self.n) @ self.vectors.T

    def expected_gram(self) -> np.ndarray:
        return reference_gram(self.n, self.g)

    def gram_defect(self) -> float:
        return float(np.max(np.abs(self.gram() - self.expected_gram())))


def reference_gram(n: int, g) -> np.ndarray:
    G = np.zeros((n + 2, n + 2))
    G[0, n + 1] = G[n + 1, 0] = -1.0
    G[1, n] = G[n, 1] = -1.0
    G[2:n, 2:n] = g
    return G


def _check_chart(spec: ModelSpec, p, g):
    p = np.atleast_2d(p)
    u = p[:, 1:]
    if spec.m > 1:
        s = np.abs(np.sin(u[:, :-1]))
        if np.any(s < spec.chart_margin):
            raise SingularChartPoint("singular chart point: hyperspherical coordinate pole")
    # degenerate induced metric: vertex of the cone or a caustic of the rulings
    w = np.linalg.eigvalsh(g)
    scale = np.max(np.abs(w), axis=-1)
    if np.any(w[:, 0] <= spec.chart_margin ** 2 * np.maximum(scale, 1.0)):
        raise SingularChartPoint("singular chart point: cone vertex or caustic (degenerate screen metric)")


def frame_batch(spec: ModelSpec, p, *, harmonic=True, h=None, order=2, check=True):
    """Adapted frames at many points at once.

    Returns ``(F, g, lam, lam_mean)`` with ``F`` of shape ``(K, n+2, n+2)``.
    ``lam`` is the raw ``lambda_ab = eta(e_a, dl_b)`` (before harmonic
    normalisation) and ``lam_mean`` its mean eigenvalue.
    """
    n, m = spec.n, spec.m
    p = np.atleast_2d(np.asarray(p, float))
    h = spec.h_fd if h is None else h
    x = surface_point(spec, p)
    l = ruling(spec, p[:, 1:])
    e, dl = _tangents(spec, p, h, order)
    # finite differences leave eta(e_a, l) = O(h^2); project it away so the
    # frame has the exact Gram matrix
    N0 = 0.5 * np.concatenate([np.ones((len(p), 1)), -l[:, 1:]], axis=-1)
    e = e + eta(e, l[:, None, :])[..., None] * N0[:, None, :]
    g = eta(e[:, :, None, :], e[:, None, :, :])
    g = 0.5 * (g + np.swapaxes(g, 1, 2))
    if check:
        _check_chart(spec, p, g)
    lam = eta(e[:, :, None, :], dl[:, None, :, :])
    lam = 0.5 * (lam + np.swapaxes(lam, 1, 2))
    g_inv = np.linalg.inv(g)
    lam_mean = np.einsum("kab,kab->k", g_inv, lam) / m
    # transverse null vector N: eta(N, l) = -1, N orthogonal to the screen
    T = np.zeros(n)
    T[0] = 1.0
    coef = np.einsum("kab,kb->ka", g_inv, eta(e, T))
    Tp = T - np.einsum("ka,kai->ki", coef, e)
    tl = eta(Tp, l)
    beta = -1.0 / tl
    alpha = -beta * eta(Tp, Tp) / (2.0 * tl)
    N = alpha[:, None] * l + beta[:, None] * Tp
    shift = lam_mean if harmonic else np.zeros(len(p))
    F = np.empty((len(p), n + 2, n + 2))
    P = lift(x)
    dPN = lift_tangent(x, N)
    F[:, 0] = P
    F[:, 1] = lift_tangent(x, l) - shift[:, None] * P
    F[:, 2:n] = lift_tangent(x[:, None, :], e)
    F[:, n] = dPN
    F[:, n + 1] = 0.0
    F[:, n + 1, n + 1] = 1.0
    F[:, n + 1] += shift[:, None] * dPN
    return F, g, lam, lam_mean


def adapted_frame(spec: ModelSpec, p, *, harmonic=True, order=2) -> AdaptedFrame:
    F, g, lam, lam_mean = frame_batch(spec, p, harmonic=harmonic, order=order)
    lm = float(lam_mean[0])
    lam0 = lam[0] - lm * g[0] if harmonic else lam[0]
    return AdaptedFrame(n=spec.n, vectors=F[0], g=g[0], lam=symmetrize(lam0), lam_mean=lm,
                        harmonic=harmonic)


def raw_lambda(spec: ModelSpec, p, h=None):
    """``(g_ab, lambda_ab)`` with ``A_1 = dP(l)``, second-order differences of step ``h``."""
    _, g, lam, _ = frame_batch(spec, p, harmonic=False, h=h, order=2)
    return g[0], lam[0]


def connection_forms(F, dF):
    """``Omega[k, i, j]``: coefficient of ``A_i`` in ``dA_j(d/dp_k)``."""
    # dF_k^T = F^T Omega_k
    Ft = np.broadcast_to(np.swapaxes(F, -1, -2), dF.shape)
    return np.linalg.solve(Ft, np.swapaxes(dF, -1, -2))


# -- jets ---------------------------------------------------------------------------


def _level0(spec, order):
    """Pointwise fields on the harmonic frame."""

    def f(pts):
        F, g, lam, lam_mean = frame_batch(spec, pts, harmonic=True, order=order, check=False)
        h = lam - lam_mean[:, None, None] * g
        hm = np.linalg.solve(g, h)
        mu = np.einsum("kab,kba->k", hm, hm) / spec.m
        return {"F": F, "g": g, "h": h, "mu": mu}

    return f


def _pack(d: dict):
    keys = sorted(d)
    K = len(next(iter(d.values())))
    shapes = [d[k].shape[1:] for k in keys]
    flat = np.concatenate([d[k].reshape(K, -1) for k in keys], axis=1)
    return flat, keys, shapes


def _unpack(flat, keys, shapes):
    out, i = {}, 0
    lead = flat.shape[:-1]
    for k, s in zip(keys, shapes):
        size = int(np.prod(s)) if s else 1
        out[k] = flat[..., i:i + size].reshape(lead + tuple(s))
        i += size
    return out


def _derive(f, p, h):
    """Evaluate a dict-valued batch field and its 4th-order derivatives."""
    cache = {}

    def flat_f(pts):
        flat, keys, shapes = _pack(f(pts))
        cache["layout"] = (keys, shapes)
        return flat

    value = f(p)
    dflat = stencil_derivative(flat_f, p, h, order=4)
    return value, _unpack(dflat, *cache["layout"])


def _solve_cof(J, phi):
    """Split 1-form values ``phi(d/dp_k)`` (axis 1) over the coframe ``omega^1, omega^a``.

    ``J[K, k, i] = omega^i(d/dp_k)``; the result has the coframe index on axis 1.
    """
    K, d = J.shape[:2]
    rest = phi.shape[2:]
    c = np.linalg.solve(J, phi.reshape(K, d, -1))
    return c.reshape((K, d) + rest)


def _level1(spec, order):
    """Forms and first-order fields: ``lambda_abc, mu_a, nu, nu_a`` and diagnostics."""
    f0 = _level0(spec, order)
    m, n = spec.m, spec.n
    sc = slice(2, n)

    def f(pts):
        v, d = _derive(f0, pts, spec.h_nested)
        W = connection_forms(v["F"][:, None], d["F"])       # (K, k, i, j)
        J = W[:, :, 1:n, 0]                                 # coframe omega^1, omega^a
        o00 = W[:, :, 0, 0]
        o11 = W[:, :, 1, 1]
        o10 = W[:, :, 0, 1]                                 # omega_1^0
        osc = W[:, :, sc, sc]                               # [K,k,c,a] = omega_a^c
        h, g, mu = v["h"], v["g"], v["mu"]
        eye = np.eye(m)
        # nabla h_ab = dh_ab - h_cb (w_a^c - d w00) - h_ac (w_b^c - d w00)
        conn = osc - o00[..., None, None] * eye
        nab = d["h"] - np.einsum("kcb,kxca->kxab", h, conn) - np.einsum("kac,kxcb->kxab", h, conn)
        brk = nab - h[:, None] * (o00 + o11)[..., None, None] - g[:, None] * o10[..., None, None]
        comp = _solve_cof(J, brk)                           # [K, i, a, b]
        hh = np.einsum("kac,kcb->kab", h, np.linalg.solve(g, h))
        lam3_raw = np.moveaxis(comp[:, 1:], 1, 3)           # [K, a, b, c]
        g_inv = np.linalg.inv(g)
        dmu = d["mu"] + 2.0 * mu[:, None] * (o00 - o11)
        nu_c = _solve_cof(J, dmu[..., None])[..., 0]
        lam3 = np.stack([symmetrize_cubic(t) for t in lam3_raw])
        mu_a = -np.einsum("kab,kabc->kc", g_inv, lam3) / m
        return {
            "W": W, "J": J, "h": h, "g": g, "mu": mu, "lam3": lam3, "mu_a": mu_a,
            "nu": nu_c[:, 0], "nu_a": nu_c[:, 1:],
            "lam3_asym": np.array([np.max(np.abs(a - b)) for a, b in zip(lam3_raw, lam3)]),
            "lam3_t_check": np.max(np.abs(comp[:, 0] + hh), axis=(1, 2)),
        }

    return f


def _jet_fields(spec: ModelSpec, p, order=2):
    m, n = spec.m, spec.n
    sc = slice(2, n)
    f1 = _level1(spec, order)
    keep = ("mu_a", "nu", "nu_a")

    def f1_small(pts):
        out = f1(pts)
        return {k: out[k] for k in keep}

    v1 = f1(p)
    _, d1 = _derive(f1_small, p, spec.h_nested)
    W, J, h, g, mu = v1["W"], v1["J"], v1["h"], v1["g"], v1["mu"]
    mu_a, nu, nu_a = v1["mu_a"], v1["nu"], v1["nu_a"]
    o00, o11 = W[:, :, 0, 0], W[:, :, 1, 1]
    osc = W[:, :, sc, sc]
    wa0 = W[:, :, 0, sc]            # omega_a^0, [K,k,a]
    wa1 = W[:, :, 1, sc]            # omega_a^1
    eye = np.eye(m)
    conn = osc - o00[..., None, None] * eye
    K_ = np.linalg.solve(g, h)      # h^c_a = K_[c, a]
    # second equation of the mu prolongation, flat case
    nab_mu = d1["mu_a"] - np.einsum("kc,kxca->kxa", mu_a, conn)
    br_mu = (nab_mu + mu_a[:, None] * (o00 - o11)[..., None]
             + np.einsum("kca,kxc->kxa", K_, wa0) - mu[:, None, None] * wa1)
    c_mu = _solve_cof(J, br_mu)                 # [K, i, a]
    # the omega^1 part also carries mu_b h_a^b omega_0^1 (omega_0^1 = omega^1)
    nu_a_alt = c_mu[:, 0] + np.einsum("kba,kb->ka", K_, mu_a)
    nu_ab_raw = np.swapaxes(c_mu[:, 1:], 1, 2)
    # nu prolongation
    dnu = d1["nu"] + 3.0 * nu[:, None] * (o00 - o11)
    c_nu = _solve_cof(J, dnu[..., None])[..., 0]
    nab_nu = d1["nu_a"] - np.einsum("kc,kxca->kxa", nu_a, conn)
    A = 2.0 * mu[:, None, None] * np.swapaxes(K_, 1, 2) + nu[:, None, None] * eye  # [K,a,c]
    br_nu = (nab_nu + 2.0 * nu_a[:, None] * (o00 - o11)[..., None] + 2.0 * mu[:, None, None] * wa0
             - np.einsum("kac,kxc->kxa", A, wa1))
    c_rho = _solve_cof(J, br_nu)
    rho_ab_raw = np.swapaxes(c_rho[:, 1:], 1, 2)
    # omega^1 parts: consistency with the lower-order coefficients
    extra = np.einsum("kb,kba->ka", nu_a, K_) - 4.0 * mu[:, None] * mu_a
    rho_a_alt = c_rho[:, 0] + extra
    return {
        "g": g, "h": h, "lam3": v1["lam3"], "mu": mu, "mu_a": mu_a, "nu": nu, "nu_a": nu_a,
        "nu_ab": 0.5 * (nu_ab_raw + np.swapaxes(nu_ab_raw, 1, 2)),
        "rho": c_nu[:, 0], "rho_a": c_nu[:, 1:],
        "rho_ab": 0.5 * (rho_ab_raw + np.swapaxes(rho_ab_raw, 1, 2)),
        "diagnostics": {
            "lambda3_asymmetry": v1["lam3_asym"],
            "lambda3_omega1_check": v1["lam3_t_check"],
            "nu_a_check": np.max(np.abs(nu_a_alt - nu_a), axis=1),
            "nu_ab_asymmetry": np.max(np.abs(nu_ab_raw - np.swapaxes(nu_ab_raw, 1, 2)), axis=(1, 2)),
            "rho_a_check": np.max(np.abs(rho_a_alt - c_nu[:, 1:]), axis=1),
            "rho_ab_asymmetry": np.max(np.abs(rho_ab_raw - np.swapaxes(rho_ab_raw, 1, 2)), axis=(1, 2)),
        },
    }


@dataclass(frozen=True)
class ModelSample:
    """Jet and side data at one model point."""

    spec: ModelSpec
    point: np.ndarray
    jet: HypersurfaceJet
    raw_lambda: np.ndarray
    lambda_mean: float
    frame: AdaptedFrame
    diagnostics: dict = field(default_factory=dict)


def _point(spec: ModelSpec, params):
    p = np.asarray(params, float).ravel()
    if p.shape != (spec.m + 1,):
        raise ValueError(f"point parameters are (t, u_1..u_{spec.m}); got {p.shape[0]} values")
    return p


def sample_point(spec: ModelSpec, params) -> ModelSample:
    """Jet of the model at ``params = (t, u_1, ..., u_m)`` in the harmonic frame."""
    p = _point(spec, params)
    frame = adapted_frame(spec, p)           # also checks the chart
    # the nested stencils reach h_nested * 2 * 2 away; keep them inside the chart
    reach = 4.0 * spec.h_nested
    for corner in (p + reach * np.eye(len(p))[1:], p - reach * np.eye(len(p))[1:]):
        frame_batch(spec, corner, check=True)
    fields_ = _jet_fields(spec, p[None])
    m = spec.m
    jet = HypersurfaceJet(
        n=spec.n, g=frame.g, lam=frame.lam, lam3=fields_["lam3"][0],
        curvature=CurvatureSlice.zeros(m), nu=float(fields_["nu"][0]), nu_a=fields_["nu_a"][0],
        nu_ab=fields_["nu_ab"][0], rho=float(fields_["rho"][0]), rho_a=fields_["rho_a"][0],
        rho_ab=fields_["rho_ab"][0], harmonic_normalized=True,
    )
    _, raw = raw_lambda(spec, p)
    diag = {k: float(v[0]) for k, v in fields_["diagnostics"].items()}
    diag["mu_agreement"] = abs(float(fields_["mu"][0]) - float(np.trace(np.linalg.matrix_power(
        np.linalg.solve(frame.g, frame.lam), 2))) / m)
    diag["gram_defect"] = frame.gram_defect()
    return ModelSample(spec=spec, point=p, jet=jet, raw_lambda=raw, lambda_mean=frame.lam_mean,
                       frame=frame, diagnostics=diag)


def generate_jet(spec: ModelSpec, params, *, normalize=True) -> HypersurfaceJet:
    """Jet at a model point.

    With ``normalize=False`` only ``lambda_ab`` is reported in the raw frame
    ``A_1 = dP(l)``; the higher blocks are always harmonic-frame data.
    """
    s = sample_point(spec, params)
    if normalize:
        return s.jet
    return s.jet.replace(lam=s.raw_lambda, harmonic_normalized=False)


def richardson_ratio(spec: ModelSpec, params, h0=2e-2) -> float:
    """``|L(h) - L(h/2)| / |L(h/2) - L(h/4)|`` for the raw ``lambda_ab``; 4 for a second-order stencil."""
    p = _point(spec, params)
    L = [raw_lambda(spec, p, h0 / 2 ** k)[1] for k in range(3)]
    return float(np.linalg.norm(L[0] - L[1]) / np.linalg.norm(L[1] - L[2]))


# -- foci ----------------------------------------------------------------------------


@dataclass(frozen=True)
class FociComparison:
    from_jet: np.ndarray          # singular_points on the raw jet
    from_jacobian: np.ndarray     # degeneracy of the ruled map, same coordinate
    sigma_min: np.ndarray         # smallest singular value of the Jacobian at each focus
    max_difference: float


def foci_cross_check(spec: ModelSpec, params, *, tol=1e-6) -> FociComparison:
    """Compare foci of the jet with the degeneracy points of ``(u, t) -> x(u, t)``.

    Along the ruling ``x + theta l`` the Jacobian ``[l, e_a + theta dl_a]``
    drops rank where ``theta = -1/s``, i.e. at ``A_1 - s A_0``.  The
    ``theta`` values are found as the generalised eigenvalues of the
    ``n x n`` pencil ``[l, e_a, N] + theta [0, dl_a, 0]`` and confirmed by
    an SVD of the Jacobian there.
    """
    from .invariants import singular_points

    p = _point(spec, params)
    jet = generate_jet(spec, p, normalize=False)
    s_jet = singular_points(jet).s
    n, m = spec.n, spec.m
    e, dl = _tangents(spec, p[None], spec.h_fd, 2)
    e, dl = e[0], dl[0]
    l = ruling(spec, p[None, 1:])[0]
    F = adapted_frame(spec, p, harmonic=False)
    N = F.An[:n]
    A = np.column_stack([l, *e, N])
    B = np.column_stack([np.zeros(n), *dl, np.zeros(n)])
    theta = scipy.linalg.eigvals(A, -B)
    theta = theta[np.isfinite(theta)]
    if np.max(np.abs(theta.imag), initial=0.0) > 1e-8 * max(1.0, np.max(np.abs(theta), initial=0.0)):
        raise ArithmeticError("complex focal parameters")
    theta = np.sort(theta.real)
    s_jac = []
    smin = []
    for th in theta:
        if abs(th) < 1e-14:
            continue
        s_jac.append(-1.0 / th)
        jac = np.column_stack([l, *(e + th * dl)])
        sv = np.linalg.svd(jac, compute_uv=False)
        smin.append(sv[-1] / sv[0])
    s_jac = np.sort(np.array(s_jac))
    if len(s_jac) != len(s_jet):
        diff = np.inf
    else:
        diff = float(np.max(np.abs(s_jac - s_jet) / np.maximum(1.0, np.abs(s_jet))))
    return FociComparison(from_jet=s_jet, from_jacobian=s_jac, sigma_min=np.array(smin),
                          max_difference=diff)


# -- development along a generator -----------------------------------------------------


@dataclass(frozen=True)
class Development:
    t: np.ndarray
    frames: np.ndarray            # (steps+1, n+2, n+2), rows A_0..A_{n+1}
    principal_angles: np.ndarray  # span{A_0..A_{n-1}} at the two ends
    gram_defect: float            # worst deviation of the developed Gram matrix
    endpoint_defect: float        # developed frame vs the frame field at the end
    dA0_defect: float             # dA_0 outside span{A_0, A_1}

    @property
    def max_angle(self) -> float:
        return float(np.max(self.principal_angles, initial=0.0))


def _forms_along(spec, u, ts, h):
    """``Omega(d/dt)`` of the harmonic frame at parameter values ``ts``."""
    pts = np.column_stack([ts, np.broadcast_to(u, (len(ts), len(u)))])
    F = frame_batch(spec, pts, order=4)[0]
    offsets, weights = _STENCILS[4]
    sh = (pts[:, None, :] + h * offsets[None, :, None] * np.eye(len(u) + 1)[0]).reshape(-1, len(u) + 1)
    Fs = frame_batch(spec, sh, order=4, check=False)[0].reshape((len(ts), len(offsets)) + F.shape[1:])
    dF = np.einsum("ks...,s->k...", Fs, weights) / h
    return F, connection_forms(F, dF)


def develop_along_generator(spec: ModelSpec, u, t0=0.0, t1=1.0, steps=200) -> Development:
    """Integrate ``dA_j = A_i omega_j^i`` along the ruling through ``u`` (``omega^a = 0``)."""
    if steps < 1:
        raise ValueError("steps must be positive")
    u = np.asarray(u, float).ravel()
    if u.shape != (spec.m,):
        raise ValueError(f"generator parameters need {spec.m} angles")
    n = spec.n
    ts = np.linspace(t0, t1, 2 * steps + 1)
    Fgrid, Wgrid = _forms_along(spec, u, ts, min(spec.h_nested, 1e-3))
    dt = (t1 - t0) / steps
    G = ambient_form(n)

    def rate(X, W):
        # rows of X are A_j; dA_j = sum_i W[i, j] A_i
        return W.T @ X

    X = Fgrid[0].copy()
    frames = [X.copy()]
    # g_ab changes along the ruling, so the developed Gram matrix is compared
    # with that of the frame field at the same parameter
    gram_ref = Fgrid[::2] @ G @ np.swapaxes(Fgrid[::2], 1, 2)
    gram_def = 0.0
    for k in range(steps):
        W0, Wm, W1 = Wgrid[2 * k], Wgrid[2 * k + 1], Wgrid[2 * k + 2]
        k1 = rate(X, W0)
        k2 = rate(X + 0.5 * dt * k1, Wm)
        k3 = rate(X + 0.5 * dt * k2, Wm)
        k4 = rate(X + dt * k3, W1)
        X = X + dt / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
        frames.append(X.copy())
        gram_def = max(gram_def, float(np.max(np.abs(X @ G @ X.T - gram_ref[k + 1]))))
    frames = np.array(frames)
    angles = scipy.linalg.subspace_angles(frames[0][:n].T, frames[-1][:n].T)
    end_def = float(np.max(np.abs(frames[-1] - Fgrid[-1])) / np.max(np.abs(Fgrid[-1])))
    # dA_0 = w00 A_0 + w0^1 A_1: no other components
    dA0 = float(np.max(np.abs(Wgrid[:, 2:, 0])))
    return Development(t=ts[::2], frames=frames, principal_angles=np.asarray(angles),
                       gram_defect=gram_def, endpoint_defect=end_def, dA0_defect=dA0)


def geodesic_residual(spec: ModelSpec, u, t0=0.0, t1=1.0, samples=21, *, curve=None, h=1e-3) -> float:
    """Residual of the screen and transversal geodesic equations along a curve.

    For ``xi^i = omega^i(gamma')`` the equations
    ``dxi^i/dt + xi^j omega_j^i(gamma') = alpha xi^i`` with ``i`` over the
    screen and ``A_n`` are evaluated, ``alpha`` fitted by least squares.
    By default the curve is the ruling through ``u``; ``curve`` may map
    ``t`` to parameter points ``(K, m+1)`` instead.
    """
    u = np.asarray(u, float).ravel()
    n = spec.n
    if curve is None:
        def curve(t):
            t = np.atleast_1d(t)
            return np.column_stack([t, np.broadcast_to(u, (len(t), len(u)))])

    offsets, weights = _STENCILS[4]

    def d_dt(fun, ts):
        vals = np.stack([fun(ts + h * o) for o in offsets])
        return np.einsum("s...,s->...", vals, weights) / h

    def frames(ts):
        return frame_batch(spec, curve(ts), order=4)[0]

    def xi(ts):
        F = frames(ts)
        dA0 = d_dt(lambda s: frames(s)[:, 0], ts)
        # dA_0 = sum_i xi^i A_i
        return np.linalg.solve(np.swapaxes(F, 1, 2), dA0[..., None])[..., 0]

    ts = np.linspace(t0, t1, samples)
    F = frames(ts)
    W = connection_forms(F, d_dt(frames, ts))       # (K, i, j)
    X = xi(ts)
    dX = d_dt(xi, ts)
    idx = list(range(2, n + 1))
    worst = 0.0
    for k in range(len(ts)):
        base = dX[k, idx] + W[k][np.ix_(idx, list(range(1, n + 1)))] @ X[k, 1:n + 1]
        v = X[k, idx]
        alpha = float(base @ v / (v @ v)) if v @ v > 1e-24 else 0.0
        worst = max(worst, float(np.linalg.norm(base - alpha * v)))
    return worst


def perturbed_curve(u, direction, eps=0.3):
    """A curve on the hypersurface that leaves the ruling: ``u(t) = u + eps sin(pi t) v``."""
    u = np.asarray(u, float)
    v = np.asarray(direction, float)

    def curve(t):
        t = np.atleast_1d(t)
        return np.column_stack([t, u[None] + eps * np.sin(np.pi * t)[:, None] * v[None]])

    return curve


# -- CSV output ------------------------------------------------------------------------


def write_trajectory_csv(path, dev: Development) -> None:
    n2 = dev.frames.shape[1]
    names = ["A0", "A1"] + [f"A{k}" for k in range(2, n2)]
    header = ["t"] + [f"{a}_{i}" for a in names for i in range(n2)]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for t, F in zip(dev.t, dev.frames):
            w.writerow([repr(float(t))] + [repr(float(x)) for x in F.ravel()])


def write_foci_csv(path, rows) -> None:
    """``rows`` is a list of ``(generator_id, s_values)``."""
    rows = list(rows)
    width = max((len(s) for _, s in rows), default=0)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["generator"] + [f"s{k + 1}" for k in range(width)])
        for gid, s in rows:
            w.writerow([gid] + [repr(float(x)) for x in s])
