"""Minimal-energy antenna source densities for harmonic field control.

Given a small source boundary and a set of disjoint target balls, the
package assembles the double-layer trace operator onto surrounding
control spheres, finds the smallest-energy density whose traces match the
wanted fields to a prescribed accuracy, and converts the achieved
boundary residuals into sup-norm guarantees on the target balls and
beyond the observation boundary.
"""

__version__ = "0.1.0"

from .certify import (
    Certificate,
    certify_solution,
    exterior_bound,
    interior_bound,
)
from .fields import (
    HarmonicField,
    auto_epsilon,
    build_target,
    constant_field,
    dipole,
    eval_double_layer,
    eval_field,
    eval_on_grid,
    harmonic_polynomial,
    log_source,
    point_source,
    zero_field,
)
from .geometry import (
    Boundary,
    Discretization,
    QuadratureRule,
    Region,
    Scenario,
    ScenarioValidationError,
    build_rules,
    make_circle_rule,
    make_sphere_rule,
    validate_scenario,
    with_default_radii,
)
from .kernels import adjoint_kernel, dlp_kernel, phi, poisson_solve
from .operator import (
    ControlTrace,
    Density,
    ForwardOperator,
    apply,
    apply_adjoint,
    assemble_forward,
    weighted_svd,
    xi_inner,
)
from .scenario_io import ScenarioFormatError, load_scenario, parse_scenario, save_scenario
from .solver import (
    InfeasibleAccuracyError,
    SolveReport,
    discrepancy,
    solve_min_energy,
    sweep_alpha,
    tikhonov_solve,
)

__all__ = [
    "Boundary",
    "Certificate",
    "ControlTrace",
    "Density",
    "Discretization",
    "ForwardOperator",
    "HarmonicField",
    "InfeasibleAccuracyError",
    "QuadratureRule",
    "Region",
    "Scenario",
    "ScenarioFormatError",
    "ScenarioValidationError",
    "SolveReport",
    "adjoint_kernel",
    "apply",
    "apply_adjoint",
    "assemble_forward",
    "auto_epsilon",
    "build_rules",
    "build_target",
    "certify_solution",
    "constant_field",
    "dipole",
    "discrepancy",
    "dlp_kernel",
    "eval_double_layer",
    "eval_field",
    "eval_on_grid",
    "exterior_bound",
    "harmonic_polynomial",
    "interior_bound",
    "load_scenario",
    "log_source",
    "make_circle_rule",
    "make_sphere_rule",
    "parse_scenario",
    "phi",
    "point_source",
    "poisson_solve",
    "save_scenario",
    "solve_min_energy",
    "sweep_alpha",
    "tikhonov_solve",
    "validate_scenario",
    "weighted_svd",
    "with_default_radii",
    "xi_inner",
    "zero_field",
]
