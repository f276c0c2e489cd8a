"""The identification of S^n x S^n minus the diagonal with T*S^n, and the
pullback of the canonical symplectic form along a curve pair.

For ``x != y`` on the unit sphere, ``phi_x(y)`` is the stereographic image
of ``y`` from ``x`` in the hyperplane through the origin orthogonal to ``x``,
read as a tangent (co)vector at ``x`` via the round metric.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .conformal import link_cross_ratio_grid
from .curve import CurveError, LinkSet, PolyCurve
from .energy import arc_parameters
from .minkowski import fd_weights
from .moebius import lift_to_sphere

CHART_STEP = 1e-5


class SymplecticError(ValueError):
    pass


@dataclass(frozen=True)
class CotangentPoint:
    base: np.ndarray
    covector: np.ndarray


def _unit_check(p, name):
    if abs(np.linalg.norm(p) - 1.0) > 1e-9:
        raise SymplecticError(f"{name} must be a unit vector")


def phi_map(x, y):
    """Covector part of the identification, batched over leading axes."""
    dot = np.sum(x * y, axis=-1, keepdims=True)
    return x + (y - x) / (1.0 - dot)


def phi_identify(x, y) -> CotangentPoint:
    """Project ``y`` from ``x`` onto the hyperplane orthogonal to ``x``.

    The antipode of ``x`` lands on the origin; ``y -> x`` runs off to infinity.
    """
    x = np.asarray(x, float)
    y = np.asarray(y, float)
    _unit_check(x, "x")
    _unit_check(y, "y")
    if 1.0 - x @ y <= 1e-14:
        raise SymplecticError("x and y coincide")
    return CotangentPoint(x.copy(), phi_map(x, y))


def phi_inverse(point: CotangentPoint) -> np.ndarray:
    x, p = point.base, point.covector
    pp = p @ p
    return (2.0 * p + (pp - 1.0) * x) / (pp + 1.0)


# -- stereographic charts ---------------------------------------------------------

def chart_from_sphere(x, pole_sign: int):
    """Stereographic coordinates from the pole ``pole_sign * e_last``."""
    x = np.asarray(x, float)
    return x[..., :-1] / (1.0 - pole_sign * x[..., -1:])


def sphere_from_chart(xi, pole_sign: int):
    xi = np.asarray(xi, float)
    r2 = np.sum(xi * xi, axis=-1, keepdims=True)
    return np.concatenate([2.0 * xi, pole_sign * (r2 - 1.0)], axis=-1) / (r2 + 1.0)


def chart_jacobian(xi, pole_sign: int, h: float = CHART_STEP) -> np.ndarray:
    """``d sphere / d xi`` by centred differences with one Richardson step."""
    xi = np.asarray(xi, float)
    k = len(xi)
    jac = np.empty((k + 1, k))
    for a in range(k):
        e = np.zeros(k)
        e[a] = h
        d1 = (sphere_from_chart(xi + e, pole_sign) - sphere_from_chart(xi - e, pole_sign)) / (2 * h)
        d2 = (sphere_from_chart(xi + 2 * e, pole_sign) - sphere_from_chart(xi - 2 * e, pole_sign)) / (4 * h)
        jac[:, a] = (4.0 * d1 - d2) / 3.0
    return jac


def choose_chart(x) -> int:
    """Use the pole farther from ``x`` (never within 90 degrees of it)."""
    return 1 if x[-1] <= 0 else -1


def pullback_in_chart(x, xs, p_t, pole_sign: int) -> float:
    """``sum d xi_a ^ d eta_a`` on (d/ds, d/dt) in one chart.

    ``xs`` is the velocity of the base point, ``p_t`` the velocity of the
    covector along the fibre direction; both in ambient coordinates.  Fibre
    coordinates are ``eta_a = <p, d sphere / d xi_a>``.
    """
    xi = chart_from_sphere(x, pole_sign)
    jac = chart_jacobian(xi, pole_sign)
    xi_s, *_ = np.linalg.lstsq(jac, xs, rcond=None)
    eta_t = jac.T @ p_t
    return float(xi_s @ eta_t)


# -- curve pairs ------------------------------------------------------------------

def _on_sphere(c: PolyCurve) -> np.ndarray:
    if c.dim == 3:
        return lift_to_sphere(c.vertices)
    v = c.vertices
    if np.max(np.abs(np.linalg.norm(v, axis=1) - 1.0)) > 1e-9:
        raise SymplecticError("curve in R^{n+1} must lie on the unit sphere")
    return v


def _stencil(s, i, total, n):
    offs = np.arange(-2, 3)
    idx = (i + offs) % n
    delta = s[idx] - s[i]
    delta = np.where((offs > 0) & (delta < 0), delta + total, delta)
    delta = np.where((offs < 0) & (delta > 0), delta - total, delta)
    return idx, fd_weights(delta, 0.0)


def _pair_velocities(c: PolyCurve, i: int, j: int):
    if not c.closed:
        raise CurveError("pullback needs a closed curve")
    n = c.n
    if i % n == j % n:
        raise SymplecticError("need two distinct vertices")
    q = _on_sphere(c)
    s, _, total = arc_parameters(c)
    ix, wx = _stencil(s, i, total, n)
    iy, wy = _stencil(s, j, total, n)
    x = q[i]
    xs = wx @ q[ix]
    p_t = wy @ phi_map(x[None, :], q[iy])
    return x, xs, p_t


def canonical_form_pullback(c: PolyCurve, i: int, j: int, pole_sign: int | None = None) -> float:
    """Density of the pulled-back canonical form against ``dx dy`` at (i, j).

    The curve is lifted to S^3 when given in R^3; derivatives are taken in
    the curve's own arclength, so the result is comparable with the
    cross-ratio density of the same curve.
    """
    x, xs, p_t = _pair_velocities(c, i, j)
    sign = choose_chart(x) if pole_sign is None else pole_sign
    return pullback_in_chart(x, xs, p_t, sign)


def canonical_form_ambient(c: PolyCurve, i: int, j: int) -> float:
    """Same density evaluated as ``x_s . p_t`` in ambient coordinates."""
    _, xs, p_t = _pair_velocities(c, i, j)
    return float(xs @ p_t)


def cross_ratio_form_s2(fx, fy, s: float, t: float, h: float = 1e-3) -> tuple[float, float]:
    """Both sides of the S^2 identity for parametrized curves on the unit 2-sphere.

    Returns ``(Re(z_s w_t / (z - w)^2), -1/2 * x_s . p_t)`` where ``z, w`` are
    stereographic coordinates of ``x = fx(s)`` and ``y = fy(t)``.
    """
    offs = np.arange(-2, 3)
    w5 = fd_weights(h * offs, 0.0)

    def cplx(p):
        p = np.asarray(p, float)
        return (p[..., 0] + 1j * p[..., 1]) / (1.0 - p[..., 2])

    xs_pts = np.array([fx(s + h * o) for o in offs])
    yt_pts = np.array([fy(t + h * o) for o in offs])
    x, y = fx(s), fy(t)
    z, w = cplx(x), cplx(y)
    z_s = w5 @ cplx(xs_pts)
    w_t = w5 @ cplx(yt_pts)
    lhs = float(np.real(z_s * w_t / (z - w) ** 2))
    xs = w5 @ xs_pts
    p_t = w5 @ phi_map(np.asarray(x)[None, :], yt_pts)
    return lhs, -0.5 * float(xs @ p_t)


def exactness_integral(link: LinkSet) -> tuple[float, float]:
    """Signed and absolute sums of the cross-ratio real part over component pairs."""
    comps = link.components
    if len(comps) != 2:
        raise SymplecticError("exactness check expects a two-component link")
    g = link_cross_ratio_grid(comps[0], comps[1])
    return g.weighted_sum(g.re), g.weighted_sum(np.abs(g.re))
