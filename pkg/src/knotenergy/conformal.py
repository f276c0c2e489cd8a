"""Conformal angle, tangent circles, bitangent spheres and the infinitesimal cross ratio.

For a pair of curve points x, y with unit tangents u, t and unit chord
w = (y - x)/|y - x|, the circle tangent to u at x through y arrives at y
with direction ``2 (u.w) w - u``.  The conformal angle is the angle between
that direction and t.  The cross-ratio density is ``e^{i theta} / |x-y|^2``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .curve import PolyCurve, tangents
from .energy import arc_parameters

_PARALLEL_TOL = 1e-12


class ConformalError(ValueError):
    pass


@dataclass(frozen=True)
class CircleGeom:
    center: np.ndarray | None
    radius: float
    normal: np.ndarray | None
    orientation: int
    is_line: bool = False
    direction: np.ndarray | None = None


@dataclass(frozen=True)
class CrossRatioSample:
    i: int
    j: int
    absDensity: float
    theta: float
    reDensity: float
    imDensity: float
    near_zero_angle: bool = False


@dataclass(frozen=True)
class BitangentSphere:
    """Sphere (or plane) tangent to the curve at two points.

    ``kind`` is ``"sphere"``, ``"plane"`` or ``"degenerate"``.  For a plane,
    ``center`` is a point on it and ``normal`` its unit normal.
    ``orientation`` is the sign of ``det[u, y - x, t]``, i.e. which way the
    curve twists through the pair; it is 0 for planes and degenerate pairs.
    """

    kind: str
    center: np.ndarray | None
    radius: float
    normal: np.ndarray | None
    orientation: int


def _check_pair(c: PolyCurve, i: int, j: int):
    n = c.n
    if not (-n <= i < n and -n <= j < n):
        raise IndexError("vertex index out of range")
    if i % n == j % n:
        raise ConformalError("need two distinct vertices")
    if np.allclose(c.vertices[i], c.vertices[j], rtol=0, atol=0):
        raise ConformalError("coincident points")


def reflected_tangent(u, chord):
    """Direction at the far end of the circle leaving along ``u`` through ``chord``."""
    w = chord / np.linalg.norm(chord, axis=-1, keepdims=True)
    return 2.0 * np.sum(u * w, axis=-1, keepdims=True) * w - u


def angle_between(a, b):
    """Unsigned angle between unit vectors, accurate near 0 and pi."""
    return 2.0 * np.arctan2(np.linalg.norm(a - b, axis=-1), np.linalg.norm(a + b, axis=-1))


def conformal_angle_at(x, u, y, t):
    """Conformal angle for explicit points and unit tangents (any dimension)."""
    x, u, y, t = (np.asarray(a, dtype=float) for a in (x, u, y, t))
    return angle_between(reflected_tangent(u, y - x), t)


def tangent_circle(c: PolyCurve, i: int, j: int) -> CircleGeom:
    """Circle tangent to the curve at vertex ``i`` passing through vertex ``j``."""
    _check_pair(c, i, j)
    x, y = c.vertices[i], c.vertices[j]
    u = tangents(c)[i]
    d = y - x
    perp = d - (d @ u) * u
    if np.linalg.norm(perp) <= _PARALLEL_TOL * np.linalg.norm(d):
        return CircleGeom(None, np.inf, None, 1, True, u.copy())
    nvec = perp / np.linalg.norm(perp)
    radius = (d @ d) / (2.0 * (nvec @ d))
    center = x + radius * nvec
    normal = np.cross(u, nvec) if c.dim == 3 else None
    return CircleGeom(center, float(radius), normal, 1, False, u.copy())


def conformal_angle(c: PolyCurve, i: int, j: int) -> float:
    """Angle at vertex ``j`` between the two tangent circles, in [0, pi]."""
    _check_pair(c, i, j)
    T = tangents(c)
    v = c.vertices
    return float(conformal_angle_at(v[i], T[i], v[j], T[j]))


def _pair_arrays(v, T, I, J):
    chord = v[J] - v[I]
    r2 = np.einsum("...k,...k->...", chord, chord)
    theta = angle_between(reflected_tangent(T[I], chord), T[J])
    return r2, theta


def cross_ratio_sample(c: PolyCurve, i: int, j: int, flag_below: float = 1e-8) -> CrossRatioSample:
    _check_pair(c, i, j)
    r2, theta = _pair_arrays(c.vertices, tangents(c), np.array([i]), np.array([j]))
    a = 1.0 / float(r2[0])
    th = float(theta[0])
    return CrossRatioSample(i, j, a, th, a * np.cos(th), a * np.sin(th), th < flag_below)


@dataclass
class CrossRatioGrid:
    """Samples over all pairs of the chosen rows and columns (diagonal is NaN)."""

    rows: np.ndarray
    cols: np.ndarray
    arclen_rows: np.ndarray
    arclen_cols: np.ndarray
    weights_rows: np.ndarray
    weights_cols: np.ndarray
    abs: np.ndarray
    theta: np.ndarray
    re: np.ndarray
    im: np.ndarray

    def weighted_sum(self, values: np.ndarray) -> float:
        return float(np.nansum(self.weights_rows[:, None] * self.weights_cols[None, :] * values))


def cross_ratio_grid(c: PolyCurve, stride: int = 1, rows=None, cols=None) -> CrossRatioGrid:
    """Cross-ratio samples on a grid of vertex pairs.

    Weights are the trapezoid weights scaled by ``stride`` so that weighted
    sums approximate the double integral at any stride.
    """
    if stride < 1:
        raise ConformalError("stride must be positive")
    rows = np.arange(0, c.n, stride) if rows is None else np.asarray(rows)
    cols = rows if cols is None else np.asarray(cols)
    s, mu, _ = arc_parameters(c)
    T = tangents(c)
    I, J = np.meshgrid(rows, cols, indexing="ij")
    same = I == J
    with np.errstate(invalid="ignore", divide="ignore"):
        r2, theta = _pair_arrays(c.vertices, T, I, J)
    r2 = np.where(same, np.nan, r2)
    theta = np.where(same, np.nan, theta)
    a = 1.0 / r2
    return CrossRatioGrid(rows, cols, s[rows], s[cols], stride * mu[rows], stride * mu[cols],
                          a, theta, a * np.cos(theta), a * np.sin(theta))


def energy_from_cross_ratio(c: PolyCurve, stride: int = 1) -> float:
    """``sum (|Omega| - Re Omega) w_i w_j`` over the grid, the alpha=2 energy."""
    g = cross_ratio_grid(c, stride)
    return g.weighted_sum(g.abs - g.re)


def bitangent_sphere(c: PolyCurve, i: int, j: int, tol: float = 1e-10) -> BitangentSphere:
    """The sphere tangent to the curve at vertices ``i`` and ``j``.

    Coplanar configurations give a plane; when the two tangent circles
    coincide every sphere through that circle qualifies, and the result is
    tagged ``"degenerate"``.
    """
    _check_pair(c, i, j)
    if c.dim != 3:
        raise ConformalError("bitangent spheres are built for curves in R^3")
    T = tangents(c)
    x, y = c.vertices[i], c.vertices[j]
    u, t = T[i], T[j]
    d = y - x
    dn = np.linalg.norm(d)
    triple = float(np.dot(np.cross(u, d / dn), t))
    if abs(triple) > tol:
        m = np.stack([u, t, d])
        rhs = np.array([0.0, d @ t, 0.5 * (d @ d)])
        a = np.linalg.solve(m, rhs)
        return BitangentSphere("sphere", x + a, float(np.linalg.norm(a)), None, int(np.sign(triple)))
    if angle_between(reflected_tangent(u, d), t) <= tol:
        return BitangentSphere("degenerate", None, np.nan, None, 0)
    normal = np.cross(u, d)
    if np.linalg.norm(normal) <= tol * dn:
        normal = np.cross(t, d)
    normal = normal / np.linalg.norm(normal)
    return BitangentSphere("plane", x.copy(), np.inf, normal, 0)


def circle_points(circle: CircleGeom, start, m: int = 64) -> np.ndarray:
    """Points sampled around a (non-line) circle, starting at ``start``."""
    if circle.is_line:
        raise ConformalError("line has no finite sample")
    e1 = np.asarray(start, float) - circle.center
    e1 = e1 / np.linalg.norm(e1)
    e2 = circle.direction - (circle.direction @ e1) * e1
    e2 = e2 / np.linalg.norm(e2)
    ang = 2 * np.pi * np.arange(m) / m
    return circle.center + circle.radius * (np.cos(ang)[:, None] * e1 + np.sin(ang)[:, None] * e2)


def sphere_residual(sphere: BitangentSphere, points: np.ndarray) -> float:
    pts = np.asarray(points, float)
    if sphere.kind == "sphere":
        return float(np.abs(np.linalg.norm(pts - sphere.center, axis=1) - sphere.radius).max())
    if sphere.kind == "plane":
        return float(np.abs((pts - sphere.center) @ sphere.normal).max())
    raise ConformalError("degenerate bitangent sphere has no unique residual")


def link_cross_ratio_grid(c1: PolyCurve, c2: PolyCurve, stride: int = 1) -> CrossRatioGrid:
    """Cross-ratio samples with ``x`` on ``c1`` and ``y`` on ``c2``."""
    if c1.dim != c2.dim:
        raise ConformalError("components live in different dimensions")
    rows = np.arange(0, c1.n, stride)
    cols = np.arange(0, c2.n, stride)
    s1, mu1, _ = arc_parameters(c1)
    s2, mu2, _ = arc_parameters(c2)
    x = c1.vertices[rows][:, None, :]
    y = c2.vertices[cols][None, :, :]
    chord = y - x
    r2 = np.einsum("ijk,ijk->ij", chord, chord)
    if np.min(r2) == 0.0:
        raise ConformalError("components intersect")
    u = tangents(c1)[rows][:, None, :]
    t = tangents(c2)[cols][None, :, :]
    theta = angle_between(reflected_tangent(np.broadcast_to(u, chord.shape), chord),
                          np.broadcast_to(t, chord.shape))
    a = 1.0 / r2
    return CrossRatioGrid(rows, cols, s1[rows], s2[cols], stride * mu1[rows], stride * mu2[cols],
                          a, theta, a * np.cos(theta), a * np.sin(theta))
