"""Energy-decreasing relaxation of closed polygonal knots.

Each step moves the vertices against the exact gradient of the discrete
energy, optionally smoothed by a Sobolev-type filter, with a halving line
search that only accepts steps which do not raise the energy.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field

import numpy as np

from .curve import CurveError, PolyCurve, min_self_distance, resample_uniform
from .energy import EnergyError, arc_parameters, energy_alpha, energy_gradient

_MIN_STEP = 1e-14
_RESET_AFTER = 5


@dataclass
class FlowConfig:
    alpha: float = 2.0
    stepInit: float = 1e-2
    maxSteps: int = 5000
    gradTol: float = 1e-6
    resampleEvery: int = 10
    minSelfDistFactor: float = 0.25
    metric: str = "sobolev"
    sobolevPower: float = 1.5
    targetEnergy: float | None = None

    def __post_init__(self):
        if not self.stepInit > 0:
            raise ValueError("stepInit must be positive")
        if self.maxSteps < 0:
            raise ValueError("maxSteps must be non-negative")
        if self.metric not in ("sobolev", "l2"):
            raise ValueError("metric must be 'sobolev' or 'l2'")

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class FlowRecord:
    step: int
    energy: float
    stepsize: float
    gradnorm: float
    minselfdist: float
    event: str = "step"


@dataclass
class FlowTrace:
    records: list = field(default_factory=list)
    final: PolyCurve | None = None
    status: str = "running"

    @property
    def aborted(self) -> bool:
        return self.status == "abort"

    @property
    def energies(self) -> np.ndarray:
        return np.array([r.energy for r in self.records])

    def segments(self):
        """Energy runs between resampling events."""
        runs, cur = [], []
        for r in self.records:
            if r.event == "resample":
                if cur:
                    runs.append(np.array(cur))
                cur = [r.energy]
            elif r.event in ("start", "step"):
                cur.append(r.energy)
        if cur:
            runs.append(np.array(cur))
        return runs

    def is_monotone(self) -> bool:
        return all(np.all(np.diff(run) <= 0.0) for run in self.segments())


def discrete_gradient(c: PolyCurve, alpha: float = 2.0) -> np.ndarray:
    """Exact gradient of the discrete energy at the curve's own scale."""
    return energy_gradient(c, alpha)


def gradient_norm(c: PolyCurve, g: np.ndarray) -> float:
    """L2 norm of the gradient density ``g_i / w_i``, measured at unit length."""
    _, mu, total = arc_parameters(c)
    return float(np.sqrt(np.sum(np.sum(g * g, axis=1) / mu)) * total**1.5)


def sobolev_filter(g: np.ndarray, power: float) -> np.ndarray:
    """Damp Fourier mode k of a periodic vertex field by ``(1 + k)^-power``."""
    n = len(g)
    modes = np.fft.rfft(g, axis=0)
    k = np.arange(modes.shape[0])
    return np.fft.irfft(modes / ((1.0 + k) ** power)[:, None], n=n, axis=0)


def _unit(c: PolyCurve) -> PolyCurve:
    return c.scaled(1.0 / c.length)


def _energy(c: PolyCurve, alpha: float) -> float:
    try:
        return energy_alpha(c, alpha).value
    except (EnergyError, CurveError, FloatingPointError):
        return np.inf


def relax(c: PolyCurve, cfg: FlowConfig | None = None, callback=None) -> FlowTrace:
    """Run the relaxation until a stopping rule fires.

    Stops on ``gradTol`` (status ``"converged"``), on ``targetEnergy`` if set
    (``"target"``), after ``maxSteps`` accepted steps (``"max_steps"``), when
    the line search cannot find a decrease (``"stalled"``) or when vertices
    far apart along the curve come closer than ``minSelfDistFactor * L / n``
    (``"abort"``).  Resampling steps are recorded with event ``"resample"``
    and may raise the energy slightly.
    """
    cfg = cfg or FlowConfig()
    if not c.closed:
        raise CurveError("relax needs a closed curve")
    n = c.n
    cur = _unit(c)
    energy = _energy(cur, cfg.alpha)
    if not np.isfinite(energy):
        raise EnergyError("initial energy is not finite")
    trace = FlowTrace()
    threshold = cfg.minSelfDistFactor / n

    def record(step, stepsize, gnorm, event):
        rec = FlowRecord(step, energy, stepsize, gnorm, min_self_distance(cur), event)
        trace.records.append(rec)
        if callback is not None:
            callback(rec, cur)
        return rec

    g = discrete_gradient(cur, cfg.alpha)
    gnorm = gradient_norm(cur, g)
    rec = record(0, 0.0, gnorm, "start")
    if rec.minselfdist < threshold:
        trace.status = "abort"
    step = cfg.stepInit
    accepted = 0
    streak = 0
    while trace.status == "running":
        if gnorm <= cfg.gradTol:
            trace.status = "converged"
            break
        if cfg.targetEnergy is not None and energy <= cfg.targetEnergy:
            trace.status = "target"
            break
        if accepted >= cfg.maxSteps:
            trace.status = "max_steps"
            break
        direction = g if cfg.metric == "l2" else sobolev_filter(g, cfg.sobolevPower)
        direction = direction / np.abs(direction).max()
        while True:
            try:
                trial = PolyCurve(cur.vertices - step * direction)
                e_trial = _energy(trial, cfg.alpha)
            except CurveError:
                e_trial = np.inf
            if e_trial <= energy:
                break
            step *= 0.5
            streak = 0
            if step < _MIN_STEP:
                trace.status = "stalled"
                break
        if trace.status != "running":
            break
        cur, energy = trial, e_trial
        accepted += 1
        streak += 1
        taken = step
        if streak >= _RESET_AFTER:
            step, streak = cfg.stepInit, 0
        resample = cfg.resampleEvery > 0 and accepted % cfg.resampleEvery == 0
        if not resample:
            cur = _unit(cur)
        g = discrete_gradient(cur, cfg.alpha)
        gnorm = gradient_norm(cur, g)
        rec = record(accepted, taken, gnorm, "step")
        if rec.minselfdist < threshold:
            trace.status = "abort"
            break
        if resample:
            cur = _unit(resample_uniform(cur, n))
            energy = _energy(cur, cfg.alpha)
            g = discrete_gradient(cur, cfg.alpha)
            gnorm = gradient_norm(cur, g)
            rec = record(accepted, 0.0, gnorm, "resample")
            if rec.minselfdist < threshold:
                trace.status = "abort"
    if trace.aborted:
        trace.records[-1].event = "abort"
    trace.final = cur
    return trace
