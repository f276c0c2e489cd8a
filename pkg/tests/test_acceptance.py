"""Acceptance suite: one test and one PASS/FAIL line per criterion.

Run ``pytest tests/test_acceptance.py -v`` (lines appear in the pytest
output) or ``python3 tests/test_acceptance.py`` for the bare report.
"""

import sys
import time

import numpy as np
import pytest

from knotenergy import generators as gen
from knotenergy.conformal import (conformal_angle, cross_ratio_grid, cross_ratio_sample,
                                  energy_from_cross_ratio, link_cross_ratio_grid)
from knotenergy.curve import PolyCurve
from knotenergy.energy import energy_alpha, energy_cosine, energy_gradient
from knotenergy.flow import FlowConfig, relax
from knotenergy.minkowski import (blade_inner, psi_G, psi_matrix, plucker_residual,
                                  random_lorentz, signature, signed_area_grid, wedge)
from knotenergy.moebius import (MoebiusMap, SphereInversion, apply_map, circle_fit_residual,
                                light_cone_lift)
from knotenergy.symplectic import canonical_form_pullback, cross_ratio_form_s2

INVERSION = MoebiusMap((SphereInversion((0.5, 0.3, 1.5), 2.0),))


@pytest.fixture
def report(capsys):
    def emit(num, title, ok, detail):
        line = f"[{'PASS' if ok else 'FAIL'}] criterion {num:>2}: {title}: {detail}"
        with capsys.disabled():
            print("\n" + line)
        assert ok, line
    return emit


def rel(a, b):
    return abs(a - b) / abs(b)


def test_01_circle_zero_point(report):
    t0 = time.perf_counter()
    e256 = energy_alpha(gen.circle(256)).value
    elapsed = time.perf_counter() - t0
    e512 = energy_alpha(gen.circle(512)).value
    ok = abs(e256) <= 5e-3 and abs(e512) <= 0.5 * abs(e256) and elapsed < 1.0
    report(1, "circle zero-point", ok,
           f"E(256)={e256:.3e} E(512)={e512:.3e} ratio={e512 / e256:.3f} time={elapsed:.3f}s")


def test_02_moebius_invariance(report):
    diffs = []
    for n in (512, 1024):
        c = gen.trefoil(n)
        diffs.append(rel(energy_alpha(apply_map(INVERSION, c)).value, energy_alpha(c).value))
    ok = diffs[0] <= 1e-2 and diffs[1] < diffs[0]
    report(2, "Moebius invariance", ok, f"rel diff n=512 {diffs[0]:.2e}, n=1024 {diffs[1]:.2e}")


def _curves(n):
    return {"trefoil": gen.trefoil(n), "ellipse 2:1": gen.ellipse(n)}


def test_03_cosine_formula(report):
    parts, ok = [], True
    for name in ("trefoil", "ellipse 2:1"):
        d = [rel(energy_cosine(c).value, energy_alpha(c).value)
             for c in (_curves(256)[name], _curves(512)[name])]
        ok &= d[0] <= 1e-2 and d[1] < d[0]
        parts.append(f"{name} {d[0]:.2e}->{d[1]:.2e}")
    report(3, "cosine formula", ok, "; ".join(parts))


def test_04_cross_ratio_energy(report):
    parts, ok = [], True
    for name, c in _curves(256).items():
        d = rel(energy_from_cross_ratio(c), energy_alpha(c).value)
        ok &= d <= 1e-2
        parts.append(f"{name} {d:.2e}")
    report(4, "cross-ratio energy identity", ok, "; ".join(parts))


@pytest.fixture(scope="module")
def area_grid():
    c = gen.trefoil(2048)
    rows = np.arange(0, 2048, 64)
    return signed_area_grid(c, rows, rows), cross_ratio_grid(c, rows=rows)


def test_05_signed_area(area_grid, report):
    area, g = area_grid
    off = ~np.eye(32, dtype=bool)
    worst = np.max(np.abs(2 * g.re - area.area)[off] / g.abs[off])
    report(5, "signed-area identity", worst <= 1e-3, f"max |2Re-area|/|Omega| = {worst:.2e} (32x32)")


def test_06_lightlike(area_grid, report):
    area, _ = area_grid
    off = ~np.eye(32, dtype=bool)
    xx = np.max(np.abs(area.xx)[off] / area.xx_scale[off])
    yy = np.max(np.abs(area.yy)[off] / area.yy_scale[off])
    report(6, "lightlike partials", max(xx, yy) <= 1e-6, f"<sx,sx> {xx:.2e}, <sy,sy> {yy:.2e}")


def test_07_link_exactness(report):
    parts, ok = [], True
    for name, link in (("Hopf", gen.hopf_link(256)), ("(2,4) torus", gen.torus_link(256))):
        g = link_cross_ratio_grid(*link.components)
        signed, total = g.weighted_sum(g.re), g.weighted_sum(np.abs(g.re))
        ok &= abs(signed) <= 1e-2 * total
        parts.append(f"{name} {abs(signed) / total:.2e}")
    report(7, "link exactness", ok, "; ".join(parts))


def test_08_plucker_lorentz(report):
    rng = np.random.default_rng(2024)
    t0 = time.perf_counter()
    pl = hom = po = eq = 0.0
    for q in (0, 1, 2):
        pl = max(pl, float(plucker_residual(wedge(rng.standard_normal((1000, q + 2, 5)))).max()))
        s = np.diag(signature(q, 3))
        for _ in range(100):
            a, b = random_lorentz(rng, 5), random_lorentz(rng, 5)
            pa, pb = psi_matrix(a, q, 3), psi_matrix(b, q, 3)
            scale = np.abs(pa).max() * np.abs(pb).max()
            hom = max(hom, np.abs(psi_matrix(a @ b, q, 3) - pa @ pb).max() / scale)
            po = max(po, np.abs(pa.T @ s @ pa - s).max() / np.abs(pa).max() ** 2)
            # q+2 points on S^3 span a plane that meets the light cone transversally
            pts = rng.standard_normal((q + 2, 4))
            basis = light_cone_lift(pts / np.linalg.norm(pts, axis=1, keepdims=True))
            e = psi_G(basis)
            moved = psi_G(basis @ a.T)
            eq = max(eq, np.abs(moved.coords - pa @ e.coords).max())
    elapsed = time.perf_counter() - t0
    ok = pl <= 1e-10 and hom <= 1e-10 and po <= 1e-10 and eq <= 1e-9 and elapsed < 10
    report(8, "Pluecker/Lorentz algebra", ok,
           f"pluecker {pl:.1e} hom {hom:.1e} pseudo-orth {po:.1e} equiv {eq:.1e} time={elapsed:.2f}s")


def test_09_symplectic_pullback(report):
    rng = np.random.default_rng(9)

    def fx(s):
        return np.array([np.cos(s) * np.cos(0.3 * np.sin(s)), np.sin(s) * np.cos(0.3 * np.sin(s)),
                         np.sin(0.3 * np.sin(s))])

    def fy(t):
        v = np.array([0.6 * np.cos(t), 0.6 * np.sin(t) + 0.2 * np.sin(2 * t), -0.8])
        return v / np.linalg.norm(v)

    two = 0.0
    for s, t in rng.uniform(0, 2 * np.pi, (50, 2)):
        lhs, rhs = cross_ratio_form_s2(fx, fy, s, t)
        two = max(two, abs(lhs - rhs) / abs(lhs))

    c = gen.trefoil(1024)
    three = 0.0
    count = 0
    while count < 100:
        i, j = (int(k) for k in rng.integers(0, 1024, 2))
        if min((i - j) % 1024, (j - i) % 1024) < 32:
            continue
        smp = cross_ratio_sample(c, i, j)
        three = max(three, abs(-0.5 * canonical_form_pullback(c, i, j) - smp.reDensity) / smp.absDensity)
        count += 1
    ok = two <= 1e-6 and three <= 1e-3
    report(9, "symplectic pullback", ok, f"S^2 identity {two:.1e}; S^3 worst of 100 pairs {three:.1e}")


def _fd_gradient(c):
    v = c.vertices
    h0 = 3e-3 * c.length / c.n
    g = np.zeros_like(v)
    for i in range(len(v)):
        for k in range(3):
            d = []
            for h in (h0, h0 / 2, h0 / 4):
                wp, wm = v.copy(), v.copy()
                wp[i, k] += h
                wm[i, k] -= h
                d.append((energy_alpha(PolyCurve(wp)).value - energy_alpha(PolyCurve(wm)).value) / (2 * h))
            g[i, k] = (8 * d[2] - 6 * d[1] + d[0]) / 3
    return g


def test_10_gradient(report):
    curves = {
        "circle": gen.circle(64),
        "trefoil": gen.sample_parameter(gen.torus_curve(2, 3), 64),
        "perturbed": gen.sample_parameter(gen.perturbed_circle_func(0.3), 64),
    }
    parts, ok = [], True
    for name, c in curves.items():
        g, fd = energy_gradient(c), _fd_gradient(c)
        err = np.abs(g - fd).max() / max(np.abs(fd).max(), 1.0 / (c.n * c.length))
        ok &= err <= 1e-5
        parts.append(f"{name} {err:.1e}")
    report(10, "gradient vs finite differences", ok, "; ".join(parts))


def test_11_relaxation(report):
    t0 = time.perf_counter()
    tr = relax(gen.perturbed_circle(128, 0.3), FlowConfig(maxSteps=5000, targetEnergy=0.05))
    elapsed = time.perf_counter() - t0
    steps = max(r.step for r in tr.records)
    final = tr.records[-1].energy
    fit = circle_fit_residual(tr.final.vertices)
    ok = final <= 0.05 and steps <= 5000 and tr.is_monotone() and elapsed < 300 and fit < 1e-2
    report(11, "relaxation", ok, f"E={final:.4f} after {steps} steps, monotone={tr.is_monotone()}, "
                                 f"circle fit {fit:.1e}, time={elapsed:.1f}s")


def test_12_clasp_blowup(report):
    tight = energy_alpha(gen.clasp_with_relative_gap(2000, 1e-3)).value
    loose = energy_alpha(gen.clasp_with_relative_gap(512, 0.1)).value
    report(12, "self-repulsion blow-up", tight > 10 * loose,
           f"E(1e-3 L)={tight:.1f}, E(0.1 L)={loose:.2f}, ratio {tight / loose:.1f}")


def test_13_near_diagonal_angle(report):
    n = 20000
    c = gen.trefoil(n)
    ks = np.unique(np.geomspace(20, 200, 9).round().astype(int))
    worst = 0.0
    for base in (0, 5000, 13000):
        ratios = [conformal_angle(c, base, base + k) / (k / n) ** 2 for k in ks]
        worst = max(worst, max(ratios) / min(ratios))
    report(13, "near-diagonal conformal angle", worst < 2.0,
           f"max/min of theta/s^2 over s in [1e-3,1e-2] L = {worst:.3f}")


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-q"]))
