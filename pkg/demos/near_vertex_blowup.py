"""Gradient blow-up near the vertices for a horizontal dipole between the tips.

Solves the exterior problem at a few gaps, samples |grad u| along the
bisector of the right vertex and fits the spatial and gap exponents.
Run:  python demos/near_vertex_blowup.py
"""
from __future__ import annotations

import math

import numpy as np

from bowtie.bie import ProblemSpec, solve_problem
from bowtie.experiments import fit_exponent, fit_power_law, ray_profile
from bowtie.geometry import BowtieConfig

ALPHA = math.pi / 2
radii = np.geomspace(1e-5, 1e-3, 9)
fixed = []
epsilons = (0.1, 0.05, 0.02, 0.01, 0.005)
for eps in epsilons:
    cfg = BowtieConfig(ALPHA, eps)
    u = solve_problem(ProblemSpec.emitter(cfg, (1.0, 0.0), 0.0))
    profile = ray_profile(u, 2, relative_radii=radii)
    fit = fit_exponent(profile)
    # compare gaps at a fixed relative distance, compensating the spatial law
    s = profile[4]
    fixed.append(s.grad_norm * s.dist_V2 ** (1 - cfg.beta))
    print(f"eps={eps:<6} c2-c1={u.c2 - u.c1:+.5f}  spatial slope {fit.slope:+.4f} (R^2 {fit.r_squared:.6f})")

beta = BowtieConfig(ALPHA, 0.1).beta
eps_fit = fit_power_law(np.array(epsilons), np.array(fixed))
print(f"gap exponent {eps_fit.slope:+.3f}; expected about {-(1 + beta):+.3f}")
