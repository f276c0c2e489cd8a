import numpy as np
import pytest

from knotenergy import generators as gen
from knotenergy.curve import CurveError, PolyCurve
from knotenergy.flow import FlowConfig, FlowRecord, FlowTrace, gradient_norm, relax, sobolev_filter
from knotenergy.energy import energy_gradient


def test_config_validation():
    with pytest.raises(ValueError):
        FlowConfig(stepInit=0.0)
    with pytest.raises(ValueError):
        FlowConfig(metric="h2")
    assert FlowConfig().to_dict()["resampleEvery"] == 10


def test_sobolev_filter_keeps_mean_and_damps_modes():
    n = 64
    t = 2 * np.pi * np.arange(n) / n
    g = np.c_[np.ones(n), np.cos(5 * t), np.zeros(n)]
    f = sobolev_filter(g, 1.5)
    assert np.allclose(f[:, 0], 1.0)
    assert np.allclose(f[:, 1], np.cos(5 * t) / 6**1.5)


def test_round_circle_is_stationary():
    tr = relax(gen.circle(64))
    assert tr.status == "converged"
    assert len(tr.records) == 1 and tr.records[0].event == "start"


def test_perturbed_circle_relaxes_monotonically():
    tr = relax(gen.perturbed_circle(64, 0.3), FlowConfig(maxSteps=40))
    e = tr.energies
    assert tr.is_monotone()
    assert e[-1] < 0.5 * e[0]
    assert any(r.event == "resample" for r in tr.records)
    assert tr.final.length == pytest.approx(1.0)


def test_l2_metric_also_descends():
    tr = relax(gen.perturbed_circle(48, 0.2), FlowConfig(metric="l2", maxSteps=15))
    assert tr.is_monotone() and tr.energies[-1] < tr.energies[0]


def test_max_steps_zero_returns_input():
    c = gen.trefoil(64)
    tr = relax(c, FlowConfig(maxSteps=0))
    assert tr.status == "max_steps"
    assert np.allclose(tr.final.vertices * c.length, c.vertices)


def test_target_energy_stops_early():
    tr = relax(gen.perturbed_circle(64, 0.3), FlowConfig(targetEnergy=1.0))
    assert tr.status == "target" and tr.records[-1].energy <= 1.0


def test_clasp_aborts():
    tr = relax(gen.clasp_with_relative_gap(128, 1e-3))
    assert tr.aborted and tr.records[-1].event == "abort"


def test_open_curve_rejected():
    with pytest.raises(CurveError):
        relax(PolyCurve(gen.circle(16).vertices, closed=False))


def test_gradient_norm_scale_free():
    c = gen.trefoil(64)
    g1 = gradient_norm(c, energy_gradient(c))
    big = c.scaled(7.0)
    assert gradient_norm(big, energy_gradient(big)) == pytest.approx(g1, rel=1e-9)


def test_trace_segments_split_at_resampling():
    recs = [FlowRecord(0, 3.0, 0, 0, 1, "start"), FlowRecord(1, 2.0, 0, 0, 1),
            FlowRecord(1, 2.1, 0, 0, 1, "resample"), FlowRecord(2, 1.5, 0, 0, 1)]
    tr = FlowTrace(recs)
    assert [list(s) for s in tr.segments()] == [[3.0, 2.0], [2.1, 1.5]]
    assert tr.is_monotone()


def test_callback_sees_every_record():
    seen = []
    relax(gen.perturbed_circle(32, 0.2), FlowConfig(maxSteps=5), callback=lambda r, c: seen.append(r))
    assert len(seen) >= 6
