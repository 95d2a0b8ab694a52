"""Regularized Riesz z-energies of closed curves, surfaces, and domains.

The package computes the meromorphic continuation B(z) of the Riesz
energy, its residues from curvature integrals, Hadamard finite parts of
cutoff integrals, and checks scaling laws and Moebius invariance.
"""

from .closed_energy import (EnergyReport, beta_sphere_closed_form,
                            continuation, cutoff_integral, energy,
                            energy_at_pole, residue_table, scaling_check,
                            sphere_beta_poles)
from .domain_energy import (ball_beta_poles, beta_ball_closed_form,
                            domain_energy, domain_residues,
                            fractional_perimeter, planar_energy)
from .errors import RieszError
from .extrinsic import (boundary_pair_profile, domain_pair_profile,
                        pair_profile, psi_pointwise, smoothness_radius)
from .moebius import (MoebiusMap, compose, homothety, invariance_check,
                      inversion, transform_shape, translation)
from .regularize import (LaurentSeries, PsiProfile, TaylorJet,
                         finite_part_cumulative, finite_part_jet,
                         laurent_fit, pole_removed_value)
from .shapes import (Curve, Domain, Surface, builtin_shape,
                     curvature_integrals, make_ellipsoid, make_sphere,
                     make_torus, parse_shape_spec)
from .validation import run_all

__version__ = "0.1.0"
