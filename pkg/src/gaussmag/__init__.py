"""Variational Gaussian wave packets in electromagnetic fields.

Parameter dynamics, Boris-type and Runge-Kutta integrators, Gaussian
averages and observables for a single packet under the semiclassical
magnetic Schrodinger equation.
"""
from gaussmag.averages import AverageEngine, FieldAverages, analytic_trig_average, point_averages
from gaussmag.core import (
    CanonicalState,
    WavePacketState,
    evaluate_packet,
    l2_norm_squared,
    normalize_phase,
    symplecticity_residual,
    to_canonical,
    to_magnetic,
    width_from_hagedorn,
)
from gaussmag.eom import field_E, field_S, mean_hess_h, rhs_canonical, rhs_transformed, zeta_R_rhs
from gaussmag.fields import PenningField3D, TrapParameters, TrigField2D, penning_scaling
from gaussmag.integrators import boris_full_step, bootstrap, mrk4_step, rk4_canonical_step
from gaussmag.observables import energy, l2_distance, parameter_errors
from gaussmag.scenarios import penning_initial, run_trajectory, sublinear_initial

__version__ = "0.1.0"

__all__ = [
    "AverageEngine",
    "CanonicalState",
    "FieldAverages",
    "PenningField3D",
    "TrapParameters",
    "TrigField2D",
    "WavePacketState",
    "analytic_trig_average",
    "boris_full_step",
    "bootstrap",
    "energy",
    "evaluate_packet",
    "field_E",
    "field_S",
    "l2_distance",
    "l2_norm_squared",
    "mean_hess_h",
    "mrk4_step",
    "normalize_phase",
    "parameter_errors",
    "penning_initial",
    "penning_scaling",
    "point_averages",
    "rhs_canonical",
    "rhs_transformed",
    "rk4_canonical_step",
    "run_trajectory",
    "sublinear_initial",
    "symplecticity_residual",
    "to_canonical",
    "to_magnetic",
    "width_from_hagedorn",
    "zeta_R_rhs",
]
