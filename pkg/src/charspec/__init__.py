"""Spectra of boundary-coupled operators via entire characteristic functions.

The package builds, for each problem kind in the catalog, an entire
function of the spectral parameter whose zeros (with argument-principle
multiplicity) are the eigenvalues.  Roots are located by winding-number
subdivision plus Newton polish, certified against eigenfunction defects,
and optionally cross-checked by a finite-difference oracle.
"""

from .catalog import (
    BoundaryDelayHeat,
    BoundaryFunctional,
    ConvectionDiffusion,
    CurveCombination,
    DelaySystem,
    FirstDerivative,
    HoloCurve,
    IntegralTerm,
    PointTerm,
    QuadraticPencil,
    SecondDerivative,
    ZERO_FUNCTIONAL,
    apply_functional,
    boundary_dimension,
    branch_point,
    cosh_sqrt,
    dirichlet_basis,
    gauss_legendre,
    integral_functional,
    is_dirichlet,
    point_functional,
    sinhc_sqrt,
    trace_operator,
)
from .charfn import (
    CharFunction,
    ProblemSpec,
    build_char_function,
    char_matrix,
    char_value,
    char_values,
    delta_matrix,
    effective_psi,
    eigenfunction,
    kernel_vectors,
    resolvent_value,
)
from .cli import JobConfig, emit_report, parse_config, run_job, serialize_config
from .errors import (
    BoundaryDegeneracyError,
    CharspecError,
    ConfigError,
    ConvergenceError,
    DimensionError,
    DivergenceError,
    NotARootError,
    QuadratureFailureError,
    ResolventUndefinedError,
    RootClusterError,
    SingularMatrixError,
    UnsupportedKindError,
)
from .linop import (
    BlockMatrix,
    block_invert,
    determinant,
    inverse,
    kernel_basis,
    lu_decompose,
    schur_complement_1,
    schur_complement_2,
    solve,
    transfer_inverse_qr,
)
from .oracle import dense_eigenvalues, eigen_residual, fd_discretize
from .rootscan import (
    Rectangle,
    RootRecord,
    RootReport,
    find_zeros,
    newton_refine,
    winding_count,
)

__version__ = "0.1.0"

__all__ = [
    "BlockMatrix",
    "BoundaryDegeneracyError",
    "BoundaryDelayHeat",
    "BoundaryFunctional",
    "CharFunction",
    "CharspecError",
    "ConfigError",
    "ConvectionDiffusion",
    "ConvergenceError",
    "CurveCombination",
    "DelaySystem",
    "DimensionError",
    "DivergenceError",
    "FirstDerivative",
    "HoloCurve",
    "IntegralTerm",
    "JobConfig",
    "NotARootError",
    "PointTerm",
    "ProblemSpec",
    "QuadraticPencil",
    "QuadratureFailureError",
    "Rectangle",
    "ResolventUndefinedError",
    "RootClusterError",
    "RootRecord",
    "RootReport",
    "SecondDerivative",
    "SingularMatrixError",
    "UnsupportedKindError",
    "ZERO_FUNCTIONAL",
    "apply_functional",
    "block_invert",
    "boundary_dimension",
    "branch_point",
    "build_char_function",
    "char_matrix",
    "char_value",
    "char_values",
    "cosh_sqrt",
    "delta_matrix",
    "dense_eigenvalues",
    "determinant",
    "dirichlet_basis",
    "effective_psi",
    "eigen_residual",
    "eigenfunction",
    "emit_report",
    "fd_discretize",
    "find_zeros",
    "gauss_legendre",
    "integral_functional",
    "inverse",
    "is_dirichlet",
    "kernel_basis",
    "kernel_vectors",
    "lu_decompose",
    "newton_refine",
    "parse_config",
    "point_functional",
    "resolvent_value",
    "run_job",
    "schur_complement_1",
    "schur_complement_2",
    "serialize_config",
    "sinhc_sqrt",
    "solve",
    "trace_operator",
    "transfer_inverse_qr",
    "winding_count",
]
