"""Sample test curves: circles, ellipses, torus knots and links, perturbations.

Every closed generator returns points equally spaced in arclength on the
smooth curve, which keeps the energy quadrature at its best accuracy.
"""

from __future__ import annotations

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy.interpolate import CubicSpline

from .curve import CurveError, LinkSet, PolyCurve

_FINE = 4096


def _speed(func, t, h=1e-6):
    return np.linalg.norm(func(t + h) - func(t - h), axis=-1) / (2 * h)


def uniform_parameters(func, n, period=2 * np.pi, offset=0.0):
    """Parameters at which ``func`` is split into ``n`` equal-length arcs.

    ``func`` maps an array of parameters to an array of points.  Arclength is
    tabulated with 8-point Gauss-Legendre panels, inverted with a cubic spline
    and refined with Newton steps.
    """
    nodes, weights = leggauss(8)
    edges = np.linspace(0.0, period, _FINE + 1)
    mid = 0.5 * (edges[:-1] + edges[1:])
    half = 0.5 * (edges[1] - edges[0])
    t = mid[:, None] + half * nodes[None, :]
    panel = half * (_speed(func, t.ravel()).reshape(t.shape) @ weights)
    cum = np.concatenate([[0.0], np.cumsum(panel)])
    total = cum[-1]
    target = total * (np.arange(n) + offset) / n
    inverse = CubicSpline(cum, edges)
    u = inverse(target)

    def arclength(x):
        idx = np.clip(np.searchsorted(edges, x) - 1, 0, _FINE - 1)
        a = edges[idx]
        hh = 0.5 * (x - a)
        pts = a[:, None] + hh[:, None] * (nodes[None, :] + 1.0)
        return cum[idx] + hh * (_speed(func, pts.ravel()).reshape(pts.shape) @ weights)

    for _ in range(3):
        u = u - (arclength(u) - target) / _speed(func, u)
    return u, total


def sample_uniform(func, n, period=2 * np.pi, offset=0.0) -> PolyCurve:
    u, _ = uniform_parameters(func, n, period, offset)
    return PolyCurve(func(u), closed=True)


def _stack(*cols):
    return np.stack(cols, axis=-1)


def circle(n: int, radius: float = 1.0, phase: float = 0.0) -> PolyCurve:
    t = phase + 2 * np.pi * np.arange(n) / n
    return PolyCurve(_stack(radius * np.cos(t), radius * np.sin(t), np.zeros(n)))


def ellipse(n: int, a: float = 2.0, b: float = 1.0) -> PolyCurve:
    return sample_uniform(lambda t: _stack(a * np.cos(t), b * np.sin(t), 0 * t), n)


def torus_curve(p: int, q: int, major: float = 2.0, minor: float = 1.0, phase: float = 0.0):
    """Parametrization of the (p, q) torus curve; ``phase`` shifts the tube angle."""
    def func(t):
        rho = major + minor * np.cos(q * t + phase)
        return _stack(rho * np.cos(p * t), rho * np.sin(p * t), minor * np.sin(q * t + phase))
    return func


def torus_knot(n: int, p: int = 2, q: int = 3, major: float = 2.0, minor: float = 1.0,
               offset: float = 0.0) -> PolyCurve:
    if np.gcd(p, q) != 1:
        raise CurveError("p and q must be coprime for a knot")
    return sample_uniform(torus_curve(p, q, major, minor), n, offset=offset)


def trefoil(n: int, offset: float = 0.0) -> PolyCurve:
    return torus_knot(n, 2, 3, offset=offset)


def perturbed_circle_func(amplitude: float = 0.3, modes=(2, 3, 4), seed: int = 0):
    """Parametrization of the unit circle with radial and out-of-plane Fourier modes."""
    rng = np.random.default_rng(seed)
    coef = rng.uniform(-1.0, 1.0, size=(len(modes), 4))
    coef /= np.abs(coef).sum(axis=0, keepdims=True).max()

    def func(t):
        rad = np.ones_like(t)
        z = np.zeros_like(t)
        for (c1, s1, c2, s2), k in zip(coef, modes):
            rad = rad + amplitude * (c1 * np.cos(k * t) + s1 * np.sin(k * t))
            z = z + amplitude * (c2 * np.cos(k * t) + s2 * np.sin(k * t))
        return _stack(rad * np.cos(t), rad * np.sin(t), z)

    return func


def perturbed_circle(n: int, amplitude: float = 0.3, modes=(2, 3, 4), seed: int = 0) -> PolyCurve:
    """Unit circle with Fourier bumps of size ``amplitude``, equal arclength spacing."""
    return sample_uniform(perturbed_circle_func(amplitude, modes, seed), n)


def sample_parameter(func, n, period=2 * np.pi) -> PolyCurve:
    """Vertices at equally spaced parameter values (not equal arclength)."""
    return PolyCurve(func(period * np.arange(n) / n), closed=True)


def hopf_link(n: int) -> LinkSet:
    """Two unit circles, each passing through the other's centre."""
    t = 2 * np.pi * np.arange(n) / n
    a = _stack(np.cos(t), np.sin(t), 0 * t)
    b = _stack(1.0 + np.cos(t), 0 * t, np.sin(t))
    return LinkSet((PolyCurve(a), PolyCurve(b)))


def torus_link(n: int, major: float = 2.0, minor: float = 1.0) -> LinkSet:
    """The (2, 4) torus link as two (1, 2) curves half a turn apart in the tube."""
    comps = tuple(sample_uniform(torus_curve(1, 2, major, minor, phase), n)
                  for phase in (0.0, np.pi))
    return LinkSet(comps)


def figure_eight_planar(n: int) -> PolyCurve:
    """Lemniscate of Gerono, lifted out of the plane at its crossing."""
    return sample_uniform(lambda t: _stack(np.sin(t), np.sin(t) * np.cos(t), 0.3 * np.cos(t)), n)


def helix_open(n: int, turns: float = 2.0, radius: float = 1.0, pitch: float = 0.5) -> PolyCurve:
    t = np.linspace(0.0, 2 * np.pi * turns, n)
    return PolyCurve(_stack(radius * np.cos(t), radius * np.sin(t), pitch * t / (2 * np.pi)), closed=False)


def clasp_curve(n: int, gap: float) -> PolyCurve:
    """Planar loop pinched at the middle until two strands are ``gap`` apart.

    The neck is flat to fourth order, so the strands stay nearly parallel
    over a long stretch: the energy then grows like ``1/gap``.
    """
    if not 0.0 < gap < 2.0:
        raise CurveError("gap must lie in (0, 2)")
    return sample_uniform(lambda t: _stack(np.cos(t), np.sin(t) * (0.5 * gap + (1 - 0.5 * gap) * np.cos(t) ** 4), 0 * t), n)


def clasp_with_relative_gap(n: int, fraction: float) -> PolyCurve:
    """Clasp curve whose neck gap is ``fraction`` times its total length."""
    from scipy.optimize import brentq

    def length(gap):
        _, total = uniform_parameters(
            lambda t: _stack(np.cos(t), np.sin(t) * (0.5 * gap + (1 - 0.5 * gap) * np.cos(t) ** 4), 0 * t), 8)
        return total

    gap = brentq(lambda g: g - fraction * length(g), 1e-12, 1.0, xtol=1e-15)
    return clasp_curve(n, gap)
