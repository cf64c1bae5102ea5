"""Foliation-preserving integrators for ODEs whose flow maps leaves of a group orbit foliation to leaves."""
from foliate.diagnostics import (
    Trajectory,
    convergence_order,
    convergence_study,
    figure2_experiment,
    integrate,
    leaf_drift,
    leaf_spread,
    midpoint_coefficient,
)
from foliate.errors import (
    CatalogueError,
    DimensionError,
    DivergenceError,
    DomainError,
    FoliateError,
    NonConvergenceError,
    PrecisionFloorError,
    SingularLeafError,
    StepError,
)
from foliate.foliation import (
    AdjointConjugation,
    FiberTranslation,
    FoliateSystem,
    GradientForm,
    GroupAction,
    LeftMultiplication,
    PlainSystem,
    RotationAction,
    check_foliate_numeric,
    check_system_foliate,
)
from foliate.integrators import METHODS, TABLEAUS, ButcherTableau, SolveConfig, make_stepper
from foliate.matgroup import BACKEND, commutator, dexpinv, mat_exp
from foliate.systems import CATALOGUE, builtin_system, default_ic

__version__ = "0.1.0"

__all__ = [
    "AdjointConjugation",
    "BACKEND",
    "ButcherTableau",
    "CATALOGUE",
    "CatalogueError",
    "DimensionError",
    "DivergenceError",
    "DomainError",
    "FiberTranslation",
    "FoliateError",
    "FoliateSystem",
    "GradientForm",
    "GroupAction",
    "LeftMultiplication",
    "METHODS",
    "NonConvergenceError",
    "PlainSystem",
    "PrecisionFloorError",
    "RotationAction",
    "SingularLeafError",
    "SolveConfig",
    "StepError",
    "TABLEAUS",
    "Trajectory",
    "builtin_system",
    "check_foliate_numeric",
    "check_system_foliate",
    "commutator",
    "convergence_order",
    "convergence_study",
    "default_ic",
    "dexpinv",
    "figure2_experiment",
    "integrate",
    "leaf_drift",
    "leaf_spread",
    "make_stepper",
    "mat_exp",
    "midpoint_coefficient",
]
