"""Moebius-invariant knot energies, conformal sphere geometry and gradient relaxation."""

from .curve import CurveError, LinkSet, PolyCurve, resample_uniform, tangents, total_length
from .energy import (EnergyReport, cross_energy, energy_alpha, energy_cosine, energy_gradient,
                     energy_open, energy_sphere)
from .flow import FlowConfig, FlowTrace, relax

__all__ = [
    "CurveError", "LinkSet", "PolyCurve", "resample_uniform", "tangents", "total_length",
    "EnergyReport", "cross_energy", "energy_alpha", "energy_cosine", "energy_gradient",
    "energy_open", "energy_sphere", "FlowConfig", "FlowTrace", "relax",
]
