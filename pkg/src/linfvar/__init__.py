"""Solver and verifier for second-order supremal variational problems.

Minimize the essential supremum of F(x, u, Du, A:D^2u) under clamped
boundary data (values and slopes) by p-continuation on penalized L^p
energies, then certify candidates against the sign/constancy equation
coupled with the linear divergence-form dual equation.
"""

from .grid import (BoundaryData, ClampedOperators, EllipticMatrix, Grid,
                   GridError, Jet2Field, ScalarField, build_grid,
                   clamp_boundary)
from .lp_energy import (DualFields, LpEnergyConfig, energy, extract_duals,
                        gradient)
from .minimizer import (ContinuationReport, ContinuationSchedule, SolverError,
                        StageStats, continuation_solve)
from .oracle_1d import PiecewiseQuadratic, optimality_witness, solve_exact
from .supremand import (SupremandSpec, certify_convexity, make_additive,
                        make_multiplicative, make_pure_xi, wrap_phi)

__version__ = "0.1.0"
