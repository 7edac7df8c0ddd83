"""Mollified self-similar solutions with singular wave fans.

Three model problems are reconstructed, mollified at a sequence of
scales and checked against their weak-residual limits and energy
budgets: a 1-D crack fan, a radially symmetric cavitating motion and a
Lagrangean p-system vacuum fan.
"""
from .cavitation3d import (EnergyAudit3D, KernelPreconditionError, NoCavitationError, SimilarityProfile,
                           energy_fan_3d, energy_limit_numeric, radial_residual, shoot_profile, verify_layer_bounds)
from .cli import ExperimentConfig, RunManifest, emit_plot_data, run_experiment
from .constitutive import make_stored_energy, make_stress_law
from .crack1d import CrackFan, crack_residual, energy_audit, solve_fan
from .mollify import Mollifier, make_mollifier
from .vacuum1d import VacuumFan, make_vacuum_fan, vacuum_energy, vacuum_residual
from .weakform import ResidualReport, extrapolate_limit

__version__ = "0.1.0"

__all__ = [
    "CrackFan", "EnergyAudit3D", "ExperimentConfig", "KernelPreconditionError", "Mollifier", "NoCavitationError",
    "ResidualReport", "RunManifest", "SimilarityProfile", "VacuumFan", "crack_residual", "emit_plot_data",
    "energy_audit", "energy_fan_3d", "energy_limit_numeric", "extrapolate_limit", "make_mollifier",
    "make_stored_energy", "make_stress_law", "make_vacuum_fan", "radial_residual", "run_experiment",
    "shoot_profile", "solve_fan", "vacuum_energy", "vacuum_residual", "verify_layer_bounds",
]
