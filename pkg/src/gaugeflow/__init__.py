"""Gauged Schrödinger maps, harmonic map heat flow and Chern-Simons-Schrödinger on a 2-D grid."""
from .grid import Grid2D, integrate, l2_norm, laplacian, make_grid, partial, tree_sum
from .gauge import (
    CssState,
    GaugedState,
    PoissonError,
    constraint_residuals,
    coulomb_project,
    covariant_derivative,
    curvature_f12,
    gauge_transform,
    solve_poisson,
)
from .flows import CFLError, FlowSpec, NumericalAbort, evolve, rhs, step_rk4, trajectory
from .diagnostics import (
    DiagRow,
    charge,
    diag_row,
    energy_css,
    energy_har,
    energy_sm,
    hamiltonian_sch,
    law_residuals,
    stress_energy,
    virial,
)
from .maps import MapField, bump_data, gauge_from_map, path_independence_residual, reconstruct_frame
from .solitons import jackiw_pi_data, self_dual_data, self_duality_residual
from .io import read_snapshot, read_timeseries, write_snapshot, write_timeseries

__version__ = "0.1.0"
