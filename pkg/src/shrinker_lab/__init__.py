"""Numerical laboratory for self-shrinking gradient graphs under the
interpolating family of fully nonlinear Hessian-eigenvalue operators:
exact quadratic solutions and their certification, graph geometry, the
transform pipeline, non-quadratic entire constructions with certificates,
and radial shooting experiments.
"""

from .numerics import (
    Grid1D,
    Trajectory,
    eig_sym,
    eig_sym_full,
    fd_gradient,
    fd_hessian,
    integrate_ode,
    invert_monotone,
)
from .fields import (
    AffineScaledField,
    CallableField,
    GridField1D,
    QuadraticField,
    RadialProfileField,
    ScalarField,
    SeparableExtensionField,
    Table1DField,
)
from .tau import (
    Branch,
    ConeSpec,
    ConeViolation,
    InverseRangeError,
    TauParams,
    admissible,
    cone_spec,
    drift_residual,
    f_derivative,
    f_inverse,
    f_value,
    growth_ratio,
    minkowski_residual,
    operator_value,
    phase,
    shrinker_residual,
    weighted_p_laplace_residual,
)
from .geometry import (
    ambient_metric,
    induced_metric,
    mean_curvature,
    metric_duality_defect,
    normal_project,
    shrinker_defect,
)
from .quadratics import QuadraticSolution, build_quadratic, random_admissible_matrix, verify_quadratic
from .transforms import (
    convexify_shift,
    legendre_1d,
    legendre_dual_residual,
    logit_equation_residual,
    normalize_counterexample_branch,
    reduce_to_special_lagrangian,
    self_similar_extension,
    shifted_equation_residual,
    symmetry_negate,
)
from .constructor import (
    Certificate,
    PhaseTrajectory,
    TrivialSolutionError,
    assemble_nd,
    assemble_w1,
    build_counterexample,
    build_mss_counterexample,
    solve_phase_ode,
)
from .shooting import RadialProfile, ShotEvent, radial_quadratic_reference, shoot_radial

__version__ = "0.1.0"
