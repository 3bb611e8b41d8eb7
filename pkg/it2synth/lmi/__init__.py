"""Affine matrix inequalities, their vectorized form and the conic backend."""

from .expressions import (
    AffineBlockMatrix,
    AffineExpr,
    DecisionVar,
    Term,
    as_expr,
    he,
    schur_linearize,
    selector,
)
from .problem import (
    DEFAULT_EPSILON,
    ConicBlock,
    Constraint,
    FeasibilityProblem,
    Sense,
    to_feasibility,
    write_sdpa,
)
from .solver import (
    ConstraintCheck,
    SdpSolution,
    SolutionAudit,
    SolverOptions,
    SolveStatus,
    check_solution,
    solve_feasibility,
)

__all__ = [
    "AffineBlockMatrix",
    "AffineExpr",
    "ConicBlock",
    "Constraint",
    "ConstraintCheck",
    "DEFAULT_EPSILON",
    "DecisionVar",
    "FeasibilityProblem",
    "SdpSolution",
    "Sense",
    "SolutionAudit",
    "SolveStatus",
    "SolverOptions",
    "Term",
    "as_expr",
    "check_solution",
    "he",
    "schur_linearize",
    "selector",
    "solve_feasibility",
    "to_feasibility",
    "write_sdpa",
]
