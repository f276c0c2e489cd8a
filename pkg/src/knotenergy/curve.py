"""Discrete curves: vertex arrays with an arclength table.

A :class:`PolyCurve` is an ordered list of vertices in R^d (d is 3 for knots
in space and 4 for knots lifted to the unit 3-sphere).  It is immutable; every
operation returns new arrays or new curves.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy.optimize import brentq

MIN_ENERGY_VERTICES = 8
_COLLINEAR_TOL = 1e-12


class CurveError(ValueError):
    """Raised for invalid curve data or invalid curve queries."""


@dataclass(frozen=True, eq=False)
class PolyCurve:
    """Closed or open polyline.

    Parameters
    ----------
    vertices : array_like, shape (n, d)
        Vertex coordinates.  For a closed curve the closing edge from the
        last vertex back to the first is implicit; do not repeat vertex 0.
    closed : bool
        Whether the curve is a closed loop.
    """

    vertices: np.ndarray
    closed: bool = True

    def __post_init__(self):
        v = np.array(self.vertices, dtype=float)
        if v.ndim != 2 or v.shape[1] < 2:
            raise CurveError(f"vertices must have shape (n, d>=2), got {v.shape}")
        if len(v) < 2:
            raise CurveError("a curve needs at least 2 vertices")
        if not np.all(np.isfinite(v)):
            raise CurveError("vertices must be finite")
        v.setflags(write=False)
        object.__setattr__(self, "vertices", v)
        if np.any(self.segment_lengths <= 0.0):
            k = int(np.argmin(self.segment_lengths))
            raise CurveError(f"consecutive vertices {k} and {(k + 1) % len(v)} coincide")

    def __len__(self):
        return len(self.vertices)

    @property
    def n(self) -> int:
        return len(self.vertices)

    @property
    def dim(self) -> int:
        return self.vertices.shape[1]

    @cached_property
    def edges(self) -> np.ndarray:
        """Edge vectors; edge k runs from vertex k to vertex k+1 (cyclically if closed)."""
        v = self.vertices
        nxt = np.roll(v, -1, axis=0) if self.closed else v[1:]
        e = nxt - (v if self.closed else v[:-1])
        e.setflags(write=False)
        return e

    @cached_property
    def segment_lengths(self) -> np.ndarray:
        ell = np.linalg.norm(self.edges, axis=1)
        ell.setflags(write=False)
        return ell

    @cached_property
    def arclength(self) -> np.ndarray:
        """Cumulative arclength table.

        Entry k is the arclength from vertex 0 to vertex k; the final entry
        (index n for closed curves, n-1 for open ones) is the total length.
        """
        s = np.concatenate([[0.0], np.cumsum(self.segment_lengths)])
        s.setflags(write=False)
        return s

    @property
    def length(self) -> float:
        return float(self.arclength[-1])

    def scaled(self, factor: float, center=None) -> "PolyCurve":
        center = self.vertices.mean(axis=0) if center is None else np.asarray(center)
        return PolyCurve(center + factor * (self.vertices - center), self.closed)

    def transformed(self, rotation=None, translation=None, scale: float = 1.0) -> "PolyCurve":
        v = self.vertices * scale
        if rotation is not None:
            v = v @ np.asarray(rotation).T
        if translation is not None:
            v = v + np.asarray(translation)
        return PolyCurve(v, self.closed)


@dataclass(frozen=True, eq=False)
class LinkSet:
    """A link: several closed, pairwise disjoint components."""

    components: tuple

    def __post_init__(self):
        comps = tuple(self.components)
        if len(comps) < 1:
            raise CurveError("a link needs at least one component")
        for c in comps:
            if not c.closed:
                raise CurveError("link components must be closed")
        for a in range(len(comps)):
            for b in range(a + 1, len(comps)):
                if _min_cross_distance(comps[a].vertices, comps[b].vertices) <= 0.0:
                    raise CurveError(f"link components {a} and {b} intersect")
        object.__setattr__(self, "components", comps)

    def __len__(self):
        return len(self.components)

    def __iter__(self):
        return iter(self.components)

    def __getitem__(self, k):
        return self.components[k]


def _min_cross_distance(a: np.ndarray, b: np.ndarray) -> float:
    best = math.inf
    for start in range(0, len(a), 512):
        block = a[start:start + 512]
        d = np.linalg.norm(block[:, None, :] - b[None, :, :], axis=2)
        best = min(best, float(d.min()))
    return best


def point_distance(c: PolyCurve, p) -> float:
    """Distance from a point to the polyline (edges included, not just vertices)."""
    p = np.asarray(p, dtype=float)
    v = c.vertices[: len(c.edges)]
    e = c.edges
    t = np.clip(np.einsum("ij,ij->i", p - v, e) / np.einsum("ij,ij->i", e, e), 0.0, 1.0)
    return float(np.min(np.linalg.norm(v + t[:, None] * e - p, axis=1)))


def total_length(c: PolyCurve) -> float:
    """Sum of segment lengths."""
    return c.length


def _check_index(c: PolyCurve, i: int) -> int:
    if not -c.n <= i < c.n:
        raise CurveError(f"vertex index {i} out of range for {c.n} vertices")
    return i % c.n


def arc_distance(c: PolyCurve, i: int, j: int) -> float:
    """Shorter arclength between vertices ``i`` and ``j`` of a closed curve."""
    if not c.closed:
        raise CurveError("arc_distance requires a closed curve")
    i, j = _check_index(c, i), _check_index(c, j)
    if i == j:
        raise CurveError("arc_distance needs two distinct vertices")
    s = c.arclength
    forward = abs(s[j] - s[i])
    return float(min(forward, s[-1] - forward))


def arc_distance_matrix(c: PolyCurve) -> np.ndarray:
    s = c.arclength[:-1] if c.closed else c.arclength
    diff = np.abs(s[:, None] - s[None, :])
    if c.closed:
        diff = np.minimum(diff, c.length - diff)
    return diff


def _circle_tangent(prev, mid, nxt):
    # Tangent at `mid` of the circle through the three points: invert about
    # `mid`, the circle becomes a line parallel to the tangent.
    a = prev - mid
    b = nxt - mid
    aa = np.einsum("...i,...i->...", a, a)
    bb = np.einsum("...i,...i->...", b, b)
    t = b / bb[..., None] - a / aa[..., None]
    ab = np.einsum("...i,...i->...", a, b)
    cross_sq = np.maximum(aa * bb - ab * ab, 0.0)
    collinear = np.sqrt(cross_sq) <= _COLLINEAR_TOL * np.sqrt(aa * bb)
    t = np.where(collinear[..., None], nxt - prev, t)
    return t / np.linalg.norm(t, axis=-1, keepdims=True)


def _end_tangent(p0, p1, p2):
    # Tangent at p0 of the circle through p0, p1, p2, oriented toward p1.
    a = p1 - p0
    b = p2 - p0
    t = a / (a @ a) - b / (b @ b)
    norm = np.linalg.norm(t)
    if norm <= _COLLINEAR_TOL * (1.0 / np.linalg.norm(a)) or not np.isfinite(norm):
        t = a
    t = t / np.linalg.norm(t)
    return t if t @ a > 0 else -t


def tangents(c: PolyCurve) -> np.ndarray:
    """Unit tangents at every vertex (circumscribed-circle estimate)."""
    v = c.vertices
    if c.closed:
        return _circle_tangent(np.roll(v, 1, axis=0), v, np.roll(v, -1, axis=0))
    if c.n == 2:
        t = (v[1] - v[0]) / np.linalg.norm(v[1] - v[0])
        return np.array([t, t])
    out = np.empty_like(v)
    out[1:-1] = _circle_tangent(v[:-2], v[1:-1], v[2:])
    out[0] = _end_tangent(v[0], v[1], v[2])
    out[-1] = -_end_tangent(v[-1], v[-2], v[-3])
    return out


def tangent(c: PolyCurve, i: int) -> np.ndarray:
    """Unit tangent at vertex ``i``, oriented along the vertex order."""
    i = _check_index(c, i)
    v = c.vertices
    if c.closed:
        return _circle_tangent(v[i - 1], v[i], v[(i + 1) % c.n])
    if c.n == 2:
        return (v[1] - v[0]) / np.linalg.norm(v[1] - v[0])
    if i == 0:
        return _end_tangent(v[0], v[1], v[2])
    if i == c.n - 1:
        return -_end_tangent(v[-1], v[-2], v[-3])
    return _circle_tangent(v[i - 1], v[i], v[i + 1])


def three_point_curvature_sq(a, b):
    """Squared curvature of the circle through a vertex and offsets ``a``, ``b`` to its neighbours."""
    aa = np.einsum("ij,ij->i", a, a)
    bb = np.einsum("ij,ij->i", b, b)
    ab = np.einsum("ij,ij->i", a, b)
    dd = np.einsum("ij,ij->i", a - b, a - b)
    return 4.0 * np.maximum(aa * bb - ab * ab, 0.0) / (aa * bb * dd)


def curvature_sq(c: PolyCurve) -> np.ndarray:
    """Squared curvature of the circle through each vertex and its neighbours.

    Open-curve endpoints copy the value of their interior neighbour.
    """
    v = c.vertices
    if c.closed:
        return three_point_curvature_sq(np.roll(v, 1, axis=0) - v, np.roll(v, -1, axis=0) - v)
    k2 = three_point_curvature_sq(v[:-2] - v[1:-1], v[2:] - v[1:-1])
    return np.concatenate([[k2[0]], k2, [k2[-1]]])


def _equal_chord_walk(loop, cum, ell, steps, wrap):
    """Walk ``steps`` equal chords of length ``ell`` along a polyline.

    ``loop`` holds the polyline vertices (for closed curves vertex 0 is
    repeated at the end, and the walk wraps around).  Returns the visited
    points and the arclength parameter of the last one (``inf`` when the
    walk runs off the end of an open polyline).
    """
    total = cum[-1]
    nseg = len(loop) - 1
    pts = [loop[0]]
    p = loop[0]
    seg = 0
    tau = 0.0
    laps = 0
    for _ in range(steps):
        found = False
        for _scan in range(nseg + 1):
            a = loop[seg]
            d = loop[seg + 1] - a
            dd = d @ d
            # |a + t d - p|^2 = ell^2, keep the exit root beyond the current position
            ap = a - p
            bcoef = ap @ d
            ccoef = ap @ ap - ell * ell
            disc = bcoef * bcoef - dd * ccoef
            if disc >= 0.0:
                root = (-bcoef + math.sqrt(disc)) / dd
                if tau <= root <= 1.0:
                    tau = root
                    p = a + root * d
                    found = True
                    break
            seg += 1
            tau = 0.0
            if seg == nseg:
                if not wrap:
                    break
                seg = 0
                laps += 1
        if not found:
            return pts, math.inf
        pts.append(p)
    param = laps * total + cum[seg] + tau * (cum[seg + 1] - cum[seg])
    return pts, param


def resample_uniform(c: PolyCurve, n: int) -> PolyCurve:
    """Resample to ``n`` vertices with equal spacing.

    The new vertices lie on the input polyline and are joined by chords of
    equal length (an equilateral inscribed polygon starting at vertex 0).
    Closed curves are then scaled about their centroid so the total length
    is unchanged; scale-invariant quantities are unaffected by this step.
    """
    if n < MIN_ENERGY_VERTICES:
        raise CurveError(f"resample_uniform needs n >= {MIN_ENERGY_VERTICES}, got {n}")
    v = c.vertices
    if c.closed:
        loop = np.vstack([v, v[:1]])
        steps = n
    else:
        loop = v
        steps = n - 1
    cum = np.concatenate([[0.0], np.cumsum(np.linalg.norm(np.diff(loop, axis=0), axis=1))])
    total = cum[-1]

    def walk(ell):
        _, param = _equal_chord_walk(loop, cum, ell, steps, c.closed)
        return param

    hi = total / steps
    if abs(walk(hi) - total) <= 1e-14 * total:
        ell = hi
    else:
        lo = 0.5 * hi
        while walk(lo) >= total:
            lo *= 0.5
            if lo < 1e-6 * hi:
                raise CurveError("cannot resample: polyline too irregular")
        ell = brentq(lambda x: walk(x) - total, lo, hi, xtol=1e-15 * total, rtol=1e-15,
                     maxiter=200)
    pts, _ = _equal_chord_walk(loop, cum, ell, steps, c.closed)
    out = np.array(pts[:n]) if c.closed else np.array(pts[:n - 1] + [v[-1]])
    if c.closed:
        out[0] = v[0]
        res = PolyCurve(out, True)
        return res.scaled(total / res.length)
    return PolyCurve(out, False)


def min_self_distance(c: PolyCurve, min_gap: int | None = None) -> float:
    """Closest approach between vertices that are far apart along the curve.

    Pairs whose index separation is below ``min_gap`` (default ``max(3, n//16)``)
    are ignored so that neighbouring vertices do not count as near-crossings.
    """
    n = c.n
    gap = max(3, n // 16) if min_gap is None else min_gap
    v = c.vertices
    idx = np.arange(n)
    best = math.inf
    for start in range(0, n, 512):
        rows = idx[start:start + 512]
        sep = np.abs(rows[:, None] - idx[None, :])
        if c.closed:
            sep = np.minimum(sep, n - sep)
        d = np.linalg.norm(v[rows][:, None, :] - v[None, :, :], axis=2)
        d = np.where(sep >= gap, d, np.inf)
        best = min(best, float(d.min()))
    return best
