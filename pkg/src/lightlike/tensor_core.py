"""Small dense tensor algebra on the screen distribution.

Screen indices are stored 0-based.  A screen index ``a`` of an array of size
``m = n - 2`` corresponds to frame vector ``A_{a+2}`` of the adapted frame
(the frame vectors are ``A_0, A_1, A_2, ..., A_{n-1}, A_n, A_{n+1}``).  This
is the only place the offset is stated; every other module uses it silently.

Mixed tensors ``T^a_b`` are stored as matrices with the upper index first:
``T[a, b] = T^a_b``.  Raising the first index of a covariant matrix is then
``g_inv @ t``.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import permutations

import numpy as np
import scipy.linalg

from .tolerances import DEFAULT


class MetricError(ValueError):
    """The screen metric is not symmetric positive definite."""


def _as_square(t, name="matrix"):
    t = np.asarray(t, dtype=float)
    if t.ndim != 2 or t.shape[0] != t.shape[1]:
        raise ValueError(f"{name} must be a square matrix, got shape {t.shape}")
    return t


def alternate(t):
    """Skew part with the 1/2 convention, ``(t_ab - t_ba) / 2``."""
    t = _as_square(t)
    return 0.5 * (t - t.T)


def symmetrize(t):
    """Symmetric part with the 1/2 convention."""
    t = _as_square(t)
    return 0.5 * (t + t.T)


def symmetrize_cubic(t):
    """Average of a 3-index array over all six index permutations.

    Each entry is then copied from its sorted-index representative so the
    result is symmetric bit for bit, not just up to roundoff.
    """
    t = np.asarray(t, dtype=float)
    avg = sum(np.transpose(t, p) for p in permutations(range(3))) / 6.0
    if avg.size == 0:
        return avg
    idx = np.sort(np.indices(avg.shape).reshape(3, -1), axis=0)
    return avg[tuple(idx)].reshape(avg.shape)


def symmetry_defect(t) -> float:
    """Largest entry of ``|t - t^T|``."""
    t = _as_square(t)
    return float(np.max(np.abs(t - t.T))) if t.size else 0.0


def cubic_symmetry_defect(t) -> float:
    t = np.asarray(t, dtype=float)
    if t.size == 0:
        return 0.0
    return max(float(np.max(np.abs(t - np.transpose(t, p)))) for p in permutations(range(3)))


@dataclass(frozen=True, eq=False)
class ScreenMetric:
    """Positive definite metric ``g_ab`` on the screen together with its inverse."""

    g: np.ndarray
    g_inv: np.ndarray

    @property
    def m(self) -> int:
        return self.g.shape[0]

    @classmethod
    def from_matrix(cls, g, *, symmetry_tol=DEFAULT.symmetry, inverse_tol=DEFAULT.inverse):
        g = _as_square(g, "metric")
        scale = max(1.0, float(np.max(np.abs(g)))) if g.size else 1.0
        if symmetry_defect(g) > symmetry_tol * scale:
            raise MetricError("metric not symmetric")
        g = symmetrize(g)
        try:
            c = np.linalg.cholesky(g)
        except np.linalg.LinAlgError:
            raise MetricError("metric not positive definite") from None
        eye = np.eye(g.shape[0])
        g_inv = scipy.linalg.cho_solve((c, True), eye)
        g_inv = symmetrize(g_inv)
        err = np.linalg.norm(g @ g_inv - eye) / max(1.0, np.linalg.cond(g))
        if err > inverse_tol * max(1, g.shape[0]):
            raise MetricError(f"metric inverse inaccurate (relative error {err:.2e})")
        g.setflags(write=False)
        g_inv.setflags(write=False)
        return cls(g, g_inv)

    @classmethod
    def identity(cls, m: int) -> "ScreenMetric":
        return cls.from_matrix(np.eye(m))


@dataclass(frozen=True, eq=False)
class SymMatrix:
    """Symmetric ``m x m`` matrix; the stored array is exactly symmetric."""

    entries: np.ndarray

    def __post_init__(self):
        e = _as_square(self.entries, "symmetric matrix")
        scale = max(1.0, float(np.max(np.abs(e)))) if e.size else 1.0
        if symmetry_defect(e) > DEFAULT.symmetry * scale:
            raise ValueError(f"matrix not symmetric (defect {symmetry_defect(e):.3e})")
        e = symmetrize(e)
        e.setflags(write=False)
        object.__setattr__(self, "entries", e)

    @property
    def m(self) -> int:
        return self.entries.shape[0]


@dataclass(frozen=True, eq=False)
class SymCubic:
    """Fully symmetric ``m x m x m`` array."""

    entries: np.ndarray

    def __post_init__(self):
        e = np.asarray(self.entries, dtype=float)
        if e.ndim != 3 or len(set(e.shape)) != 1:
            raise ValueError(f"cubic array must be m x m x m, got {e.shape}")
        scale = max(1.0, float(np.max(np.abs(e)))) if e.size else 1.0
        if cubic_symmetry_defect(e) > DEFAULT.symmetry * scale:
            raise ValueError("cubic array not fully symmetric")
        e = symmetrize_cubic(e)
        e.setflags(write=False)
        object.__setattr__(self, "entries", e)

    @property
    def m(self) -> int:
        return self.entries.shape[0]


@dataclass(frozen=True, eq=False)
class Affinor:
    """Mixed tensor ``T^a_b`` stored upper index first."""

    entries: np.ndarray

    def __post_init__(self):
        e = _as_square(self.entries, "affinor").copy()
        e.setflags(write=False)
        object.__setattr__(self, "entries", e)

    @property
    def m(self) -> int:
        return self.entries.shape[0]

    def trace(self) -> float:
        return float(np.trace(self.entries))

    def self_adjoint_defect(self, metric: ScreenMetric) -> float:
        """``|g T - (g T)^T|``; zero when ``T`` is g-self-adjoint."""
        return symmetry_defect(metric.g @ self.entries)


def _entries(x):
    return x.entries if isinstance(x, (SymMatrix, SymCubic, Affinor)) else np.asarray(x, dtype=float)


def _metric(g) -> ScreenMetric:
    return g if isinstance(g, ScreenMetric) else ScreenMetric.from_matrix(g)


def raise_index(g, t) -> np.ndarray:
    """``t^a_b = g^{ac} t_cb``."""
    metric = _metric(g)
    t = _as_square(_entries(t))
    if t.shape[0] != metric.m:
        raise ValueError(f"dimension mismatch: metric is {metric.m}x{metric.m}, tensor is {t.shape}")
    return metric.g_inv @ t


def lower_index(g, t) -> np.ndarray:
    """Inverse of :func:`raise_index`, ``t_ab = g_ac t^c_b``."""
    metric = _metric(g)
    t = _as_square(_entries(t))
    if t.shape[0] != metric.m:
        raise ValueError(f"dimension mismatch: metric is {metric.m}x{metric.m}, tensor is {t.shape}")
    return metric.g @ t


def covector_contract(g, t, v) -> np.ndarray:
    """``t_a^b v_b = t_ac g^{cb} v_b`` for a covariant matrix ``t``."""
    metric = _metric(g)
    return _as_square(_entries(t)) @ (metric.g_inv @ np.asarray(v, dtype=float))


def pencil_eigen(g, lam, *, residual_tol=DEFAULT.residual):
    """Roots of ``det(lam_ab - s g_ab) = 0`` with g-orthonormal eigenvectors.

    Returns ``(values, vectors)``; ``values`` ascending, ``vectors[:, k]``
    belongs to ``values[k]`` and is normalised so that ``v^T g v = 1`` and its
    largest-magnitude component is positive.
    """
    metric = _metric(g)
    lam = _as_square(_entries(lam))
    if lam.shape[0] != metric.m:
        raise ValueError("dimension mismatch between metric and pencil matrix")
    values, vectors = scipy.linalg.eigh(symmetrize(lam), metric.g)
    order = np.argsort(values, kind="stable")
    values, vectors = values[order], vectors[:, order]
    for k in range(vectors.shape[1]):
        v = vectors[:, k]
        if v[np.argmax(np.abs(v))] < 0:
            vectors[:, k] = -v
    mixed = metric.g_inv @ lam
    scale = max(np.linalg.norm(lam), np.finfo(float).tiny)
    for k in range(len(values)):
        v = vectors[:, k]
        r = np.linalg.norm(mixed @ v - values[k] * v) / max(np.linalg.norm(v), 1e-300)
        if r > residual_tol * scale:
            raise ArithmeticError(f"pencil eigenpair {k} residual {r:.2e} too large")
    return values, vectors


def cluster_values(values, rel_tol=DEFAULT.cluster):
    """Group sorted reals closer than ``rel_tol * max(spectral radius, 1)``.

    The unit floor keeps roots that are all zero up to roundoff in one
    cluster, matching the absolute floor of the umbilical test.  Returns ``(distinct, multiplicities)``; each distinct value is the mean of
    its cluster.
    """
    values = np.sort(np.asarray(values, dtype=float))
    if values.size == 0:
        return values, np.zeros(0, dtype=int)
    gap = rel_tol * max(float(np.max(np.abs(values))), 1.0)
    groups = [[values[0]]]
    for v in values[1:]:
        if v - groups[-1][-1] <= gap:
            groups[-1].append(v)
        else:
            groups.append([v])
    distinct = np.array([np.mean(gr) for gr in groups])
    mult = np.array([len(gr) for gr in groups], dtype=int)
    return distinct, mult
