import numpy as np
import pytest
from hypothesis import assume, given
from hypothesis import strategies as st

from knotenergy import generators as gen
from knotenergy.conformal import cross_ratio_sample
from knotenergy.curve import LinkSet
from knotenergy.symplectic import (SymplecticError, canonical_form_ambient,
                                   canonical_form_pullback, chart_from_sphere, chart_jacobian,
                                   choose_chart, cross_ratio_form_s2, exactness_integral,
                                   phi_identify, phi_inverse, sphere_from_chart)

seeds = st.integers(0, 2**32 - 1)


def _unit(rng, k=4):
    v = rng.standard_normal(k)
    return v / np.linalg.norm(v)


@given(seeds)
def test_phi_round_trip_and_tangency(seed):
    rng = np.random.default_rng(seed)
    x, y = _unit(rng), _unit(rng)
    assume(1 - x @ y > 1e-6)
    pt = phi_identify(x, y)
    assert abs(pt.covector @ x) < 1e-9 * (1 + np.linalg.norm(pt.covector))
    assert np.allclose(phi_inverse(pt), y, atol=1e-9)


def test_phi_antipode_and_diagonal():
    x = np.array([0.0, 0.0, 0.0, 1.0])
    assert np.allclose(phi_identify(x, -x).covector, 0.0)
    with pytest.raises(SymplecticError):
        phi_identify(x, x)
    with pytest.raises(SymplecticError):
        phi_identify(2 * x, -x)


@given(seeds, st.sampled_from([1, -1]))
def test_chart_round_trip(seed, sign):
    rng = np.random.default_rng(seed)
    x = _unit(rng)
    assume(1 - sign * x[-1] > 1e-3)
    assert np.allclose(sphere_from_chart(chart_from_sphere(x, sign), sign), x)


def test_chart_jacobian_matches_analytic():
    xi = np.array([0.3, -0.2, 0.5])
    r2 = xi @ xi
    jac = chart_jacobian(xi, 1)
    exact = np.empty((4, 3))
    for a in range(3):
        exact[:3, a] = 2 * (np.eye(3)[a] * (r2 + 1) - 2 * xi[a] * xi) / (r2 + 1) ** 2
        exact[3, a] = 4 * xi[a] / (r2 + 1) ** 2
    assert np.abs(jac - exact).max() < 1e-9


def test_choose_chart_avoids_pole():
    assert choose_chart(np.array([0, 0, 0, 0.9])) == -1
    assert choose_chart(np.array([0, 0, 0, -0.9])) == 1


def test_pullback_is_chart_independent_and_matches_ambient():
    c = gen.trefoil(512)
    for i, j in ((10, 200), (300, 40), (100, 356)):
        a = canonical_form_pullback(c, i, j, 1)
        b = canonical_form_pullback(c, i, j, -1)
        amb = canonical_form_ambient(c, i, j)
        assert a == pytest.approx(b, rel=1e-8)
        assert a == pytest.approx(amb, rel=1e-8)


def test_pullback_matches_cross_ratio_real_part():
    c = gen.trefoil(1024)
    rng = np.random.default_rng(7)
    for _ in range(20):
        i, j = rng.integers(0, 1024, size=2)
        if min((i - j) % 1024, (j - i) % 1024) < 32:
            continue
        r = cross_ratio_sample(c, int(i), int(j))
        d = canonical_form_pullback(c, int(i), int(j))
        assert abs(-0.5 * d - r.reDensity) <= 1e-3 * r.absDensity


def _on_s2(a, b):
    def f(s):
        return np.array([np.cos(a * s) * np.cos(b * np.sin(s)),
                         np.sin(a * s) * np.cos(b * np.sin(s)),
                         np.sin(b * np.sin(s))])
    return f


@given(st.floats(0.0, 6.0), st.floats(0.0, 6.0))
def test_two_sphere_identity(s, t):
    fx = _on_s2(1.0, 0.3)

    def fy(u):
        return np.array([0.6 * np.cos(u), 0.6 * np.sin(u), -0.8])

    lhs, rhs = cross_ratio_form_s2(fx, fy, s, t)
    assert lhs == pytest.approx(rhs, rel=1e-6, abs=1e-9)


def test_link_signed_sum_vanishes():
    signed, total = exactness_integral(gen.hopf_link(128))
    assert abs(signed) <= 1e-6 * total
    signed, total = exactness_integral(gen.torus_link(256))
    assert abs(signed) <= 1e-4 * total


def test_exactness_needs_two_components():
    with pytest.raises(SymplecticError):
        exactness_integral(LinkSet((gen.circle(16),)))
