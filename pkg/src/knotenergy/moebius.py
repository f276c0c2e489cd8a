"""Sphere inversions, their compositions, and the lifts R^3 -> S^3 -> light cone."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .curve import CurveError, PolyCurve, point_distance


class _Infinity:
    """The point at infinity of R^3 u {inf}."""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self):
        return "INFINITY"


INFINITY = _Infinity()

HIT_TOL = 1e-12
POLE = np.array([0.0, 0.0, 0.0, 1.0])


class MoebiusError(ValueError):
    pass


def is_infinite(p) -> bool:
    return p is INFINITY


@dataclass(frozen=True)
class SphereInversion:
    center: tuple
    radius: float

    def __post_init__(self):
        if not self.radius > 0:
            raise MoebiusError("inversion radius must be positive")
        object.__setattr__(self, "center", tuple(float(x) for x in self.center))

    @classmethod
    def parse(cls, text: str) -> "SphereInversion":
        """Read ``"cx,cy,cz,r"``."""
        parts = [float(x) for x in text.split(",")]
        if len(parts) != 4:
            raise MoebiusError(f"expected cx,cy,cz,r, got {text!r}")
        return cls(tuple(parts[:3]), parts[3])


@dataclass(frozen=True)
class MoebiusMap:
    """Composition of inversions, applied first to last."""

    inversions: tuple = ()

    def then(self, other: "MoebiusMap") -> "MoebiusMap":
        return MoebiusMap(tuple(self.inversions) + tuple(other.inversions))


def invert_point(inv: SphereInversion, p):
    """Image of ``p`` under inversion; the centre and infinity swap."""
    c = np.asarray(inv.center)
    if is_infinite(p):
        return c.copy()
    p = np.asarray(p, dtype=float)
    d = p - c
    r2 = float(d @ d)
    if r2 <= (HIT_TOL * max(inv.radius, 1.0)) ** 2:
        return INFINITY
    return c + inv.radius**2 * d / r2


def invert_points(inv: SphereInversion, pts: np.ndarray) -> np.ndarray:
    """Vectorized inversion; raises if any point sits on the centre."""
    c = np.asarray(inv.center)
    d = np.asarray(pts, dtype=float) - c
    r2 = np.einsum("ij,ij->i", d, d)
    if np.any(r2 <= (HIT_TOL * max(inv.radius, 1.0)) ** 2):
        raise MoebiusError("a vertex hits the inversion centre")
    return c + inv.radius**2 * d / r2[:, None]


def map_point(m: MoebiusMap, p):
    for inv in m.inversions:
        p = invert_point(inv, p)
    return p


def apply_map(m: MoebiusMap, c: PolyCurve) -> PolyCurve:
    """Vertexwise image of a curve; closedness is kept.

    Raises if an inversion centre lies on the (current image of the) polyline,
    where the true image would pass through infinity.
    """
    cur = c
    for inv in m.inversions:
        if point_distance(cur, inv.center) <= 1e-9 * cur.length:
            raise MoebiusError(f"inversion centre {inv.center} lies on the curve")
        cur = PolyCurve(invert_points(inv, cur.vertices), closed=c.closed)
    return cur


def lift_to_sphere(p) -> np.ndarray:
    """Inverse stereographic projection onto the unit S^3, pole (0,0,0,1)."""
    if is_infinite(p):
        return POLE.copy()
    p = np.asarray(p, dtype=float)
    r2 = np.sum(p * p, axis=-1, keepdims=True)
    return np.concatenate([2.0 * p, r2 - 1.0], axis=-1) / (r2 + 1.0)


def project_to_r3(q):
    """Stereographic projection from the pole; the pole itself maps to INFINITY."""
    q = np.asarray(q, dtype=float)
    if q.ndim == 1:
        if 1.0 - q[3] <= HIT_TOL:
            return INFINITY
        return q[:3] / (1.0 - q[3])
    denom = 1.0 - q[:, 3]
    if np.any(denom <= HIT_TOL):
        raise MoebiusError("a point sits at the projection pole")
    return q[:, :3] / denom[:, None]


def lift_curve(c: PolyCurve) -> PolyCurve:
    return PolyCurve(lift_to_sphere(c.vertices), closed=c.closed)


def project_curve(c: PolyCurve) -> PolyCurve:
    return PolyCurve(project_to_r3(c.vertices), closed=c.closed)


def light_cone_lift(q, tol: float = 1e-9) -> np.ndarray:
    """``(1, q)`` in R^5_1 for ``q`` on the unit S^3."""
    q = np.asarray(q, dtype=float)
    norms = np.linalg.norm(q, axis=-1)
    if np.any(np.abs(norms - 1.0) > tol):
        raise MoebiusError("point is not on the unit 3-sphere")
    ones = np.ones(q.shape[:-1] + (1,))
    return np.concatenate([ones, q], axis=-1)


def circumradius(a, b, c) -> float:
    """Radius of the circle through three points in any dimension."""
    u = np.asarray(a, float) - np.asarray(b, float)
    v = np.asarray(c, float) - np.asarray(b, float)
    uu, vv, uv = u @ u, v @ v, u @ v
    area2 = uu * vv - uv * uv
    if area2 <= 0:
        return np.inf
    return float(np.sqrt(uu * vv * ((u - v) @ (u - v)) / (4.0 * area2)))


def circle_fit_residual(points: np.ndarray) -> float:
    """Max deviation of points from their least-squares circle, any dimension.

    The plane comes from an SVD of the centred points; the circle inside it
    from the algebraic fit ``|p|^2 = 2 c.p + k``.
    """
    pts = np.asarray(points, float)
    mean = pts.mean(axis=0)
    rel = pts - mean
    _, sv, vt = np.linalg.svd(rel, full_matrices=False)
    if sv[1] <= 1e-14 * max(sv[0], 1.0):
        raise CurveError("points are collinear")
    basis = vt[:2]
    uv = rel @ basis.T
    off_plane = np.linalg.norm(rel - uv @ basis, axis=1)
    design = np.column_stack([2 * uv, np.ones(len(uv))])
    sol, *_ = np.linalg.lstsq(design, np.sum(uv * uv, axis=1), rcond=None)
    center = sol[:2]
    radius = np.sqrt(sol[2] + center @ center)
    in_plane = np.abs(np.linalg.norm(uv - center, axis=1) - radius)
    return float(np.max(np.hypot(in_plane, off_plane)))
