"""Divergence-conforming virtual elements for acoustic cavity eigenmodes.

The package discretizes the displacement formulation of the acoustic
eigenvalue problem in a rigid rectangular cavity with lowest-order-and-up
H(div) virtual elements on general polygonal meshes, and ships the mesh
generators, eigensolvers and convergence tooling needed to reproduce the
reference tables for the (0, a) x (0, b) test cavity.
"""

from .mesh import (
    PolygonalMesh,
    ElementGeometry,
    MeshQualityReport,
    generate_rectangular,
    generate_triangular,
    generate_hexagonal,
    generators,
    check_mesh_assumptions,
)
from .element import DofLayout, LocalOperators, monomial_exponents, polygon_moments
from .assembly import DofMap, GlobalSystem, build_dof_map, assemble, kernel_dimension_oracle
from .eigensolve import EigenOptions, Spectrum, solve, solve_dense, solve_shift_invert, pressure_field
from .fields import AnalyticField, cavity_mode
from .interp_lab import interpolate, commuting_residual, virtual_evaluate, interpolation_rate_study
from .study import StudyConfig, ConvergenceReport, exact_eigenvalues, observed_order, run_study

__version__ = "0.1.0"

__all__ = [
    "PolygonalMesh",
    "ElementGeometry",
    "MeshQualityReport",
    "generate_rectangular",
    "generate_triangular",
    "generate_hexagonal",
    "generators",
    "check_mesh_assumptions",
    "DofLayout",
    "LocalOperators",
    "monomial_exponents",
    "polygon_moments",
    "DofMap",
    "GlobalSystem",
    "build_dof_map",
    "assemble",
    "kernel_dimension_oracle",
    "EigenOptions",
    "Spectrum",
    "solve",
    "solve_dense",
    "solve_shift_invert",
    "pressure_field",
    "AnalyticField",
    "cavity_mode",
    "interpolate",
    "commuting_residual",
    "virtual_evaluate",
    "interpolation_rate_study",
    "StudyConfig",
    "ConvergenceReport",
    "exact_eigenvalues",
    "observed_order",
    "run_study",
]
