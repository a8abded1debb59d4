"""Boundary-integral solver for dipole fields around two nearly touching cone-shaped inclusions."""
from __future__ import annotations

from .analytic import DipoleSpec, exponents, extremal_boundary_points
from .bie import ProblemSpec, SolveResult, solve_problem
from .experiments import ExponentFit, Report, SweepConfig, epsilon_sweep, fit_exponent, ray_profile
from .fields import eval_fields, eval_gradient, eval_potential, extract_corner_coefficient, sample_fields
from .geometry import (
    BowtieConfig,
    PanelMesh,
    build_bowtie_boundary,
    build_disk_boundary,
    build_single_inclusion_boundary,
    check_condition_a,
    polar_about_vertex,
)

__all__ = [
    "BowtieConfig", "PanelMesh", "build_bowtie_boundary", "build_single_inclusion_boundary",
    "build_disk_boundary", "polar_about_vertex", "check_condition_a",
    "DipoleSpec", "exponents", "extremal_boundary_points",
    "ProblemSpec", "SolveResult", "solve_problem",
    "eval_potential", "eval_gradient", "eval_fields", "sample_fields", "extract_corner_coefficient",
    "SweepConfig", "ExponentFit", "Report", "epsilon_sweep", "fit_exponent", "ray_profile",
]
