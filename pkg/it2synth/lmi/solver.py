"""Conic backend and the a-posteriori eigenvalue audit."""

import time
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Mapping, Optional, Sequence

import cvxpy as cp
import numpy as np

from ..errors import ModelInputError
from ..utils.logger import get_logger
from .problem import Constraint, FeasibilityProblem

# Tolerance on non-strict constraints in the audit
AUDIT_TOL = 1e-7

_FEASIBLE_STATUSES = (cp.OPTIMAL, cp.OPTIMAL_INACCURATE)
_INFEASIBLE_STATUSES = (cp.INFEASIBLE, cp.INFEASIBLE_INACCURATE)


class SolveStatus(str, Enum):
    FEASIBLE = "feasible"
    INFEASIBLE = "infeasible"
    NUMERICAL_FAILURE = "numerical-failure"


@dataclass
class SolverOptions:
    """Backend selection and tolerances."""

    solver: str = "CLARABEL"
    fallback_solvers: list[str] = field(default_factory=lambda: ["SCS"])
    verbose: bool = False
    audit_tol: float = AUDIT_TOL
    max_iters: Optional[int] = None

    def order(self) -> list[str]:
        names = [self.solver] + [s for s in self.fallback_solvers if s != self.solver]
        return [n.upper() for n in names]


@dataclass
class ConstraintCheck:
    """Audit of one constraint."""

    name: str
    family: str
    margin: float
    required: float
    passed: bool

    def to_dict(self) -> dict[str, Any]:
        return {
            "name": self.name,
            "family": self.family,
            "margin": self.margin,
            "required": self.required,
            "passed": self.passed,
        }


@dataclass
class SolutionAudit:
    """Per-constraint ``lambda_min`` report."""

    checks: list[ConstraintCheck]

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    @property
    def worst(self) -> Optional[ConstraintCheck]:
        """Check with the smallest slack over its requirement."""
        if not self.checks:
            return None
        return min(self.checks, key=lambda c: c.margin - c.required)

    def failures(self) -> list[ConstraintCheck]:
        return [c for c in self.checks if not c.passed]

    def by_family(self) -> dict[str, float]:
        """Smallest margin per constraint family."""
        out: dict[str, float] = {}
        for c in self.checks:
            out[c.family] = min(out.get(c.family, np.inf), c.margin)
        return dict(sorted(out.items()))


@dataclass
class SdpSolution:
    """Result of one feasibility solve."""

    status: SolveStatus
    values: dict[str, np.ndarray] = field(default_factory=dict)
    audit: Optional[SolutionAudit] = None
    solver: str = ""
    solver_status: str = ""
    iterations: Optional[int] = None
    solve_seconds: float = 0.0
    attempts: list[dict[str, Any]] = field(default_factory=list)

    @property
    def feasible(self) -> bool:
        return self.status == SolveStatus.FEASIBLE

    @property
    def min_margin(self) -> float:
        if self.audit is None or not self.audit.checks:
            return float("nan")
        return min(c.margin for c in self.audit.checks)


def check_solution(
    constraints: Sequence[Constraint],
    values: Mapping[str, np.ndarray],
    tol: float = AUDIT_TOL,
) -> SolutionAudit:
    """
    Instantiate every constraint and report its smallest eigenvalue.

    Strict constraints pass when the margin is at least half their epsilon;
    non-strict ones when it is at least ``-tol``.

    Raises:
        ModelInputError: If a value has the wrong shape
    """
    checks = []
    for con in constraints:
        margin = con.margin(values)
        required = 0.5 * float(con.epsilon or 0.0) if con.sense.strict else -tol
        checks.append(
            ConstraintCheck(
                name=con.name,
                family=con.family,
                margin=margin,
                required=required,
                passed=bool(margin >= required),
            )
        )
    return SolutionAudit(checks=checks)


def _cvxpy_problem(problem: FeasibilityProblem) -> tuple[cp.Problem, cp.Variable]:
    x = cp.Variable(problem.n_x) if problem.n_x else cp.Variable(1)
    cons = []
    for block in problem.blocks:
        d = block.dim
        const = block.const.reshape(-1, order="F")
        affine = const + block.coeffs @ x if problem.n_x else const
        if d == 1:
            cons.append(affine >= 0)
            continue
        S = cp.reshape(affine, (d, d), order="F")
        cons.append(0.5 * (S + S.T) >> 0)
    return cp.Problem(cp.Minimize(0), cons), x


def solve_feasibility(
    problem: FeasibilityProblem,
    options: Optional[SolverOptions] = None,
    verbose: bool = False,
) -> SdpSolution:
    """
    Solve a feasibility problem and audit the result.

    The solvers in ``options.order()`` are tried in turn. A proof of
    infeasibility is returned at once; a solution that fails the audit or a
    solver error moves on to the next backend.

    Returns:
        SdpSolution; status is NUMERICAL_FAILURE when no backend produced an
        audited solution or an infeasibility proof
    """
    options = options or SolverOptions()
    logger = get_logger(verbose=verbose)
    if problem.n_x == 0 and not problem.blocks:
        raise ModelInputError("empty feasibility problem")

    attempts: list[dict[str, Any]] = []
    installed = set(cp.installed_solvers())
    last: Optional[SdpSolution] = None

    for name in options.order():
        if name not in installed:
            logger.debug(f"solver {name} not installed; skipped")
            attempts.append({"solver": name, "status": "not-installed"})
            continue

        cvx, x = _cvxpy_problem(problem)
        kwargs: dict[str, Any] = {"solver": name, "verbose": options.verbose}
        if options.max_iters is not None:
            kwargs["max_iters"] = options.max_iters

        start = time.perf_counter()
        try:
            cvx.solve(**kwargs)
        except cp.error.SolverError as e:
            logger.debug(f"solver {name} failed: {e}")
            attempts.append({"solver": name, "status": "solver-error"})
            continue
        elapsed = time.perf_counter() - start

        stats = cvx.solver_stats
        iterations = getattr(stats, "num_iters", None) if stats is not None else None
        attempts.append({"solver": name, "status": cvx.status})
        logger.debug(f"{name}: status {cvx.status} in {elapsed:.3f} s")

        if cvx.status in _INFEASIBLE_STATUSES:
            return SdpSolution(
                status=SolveStatus.INFEASIBLE,
                solver=name,
                solver_status=cvx.status,
                iterations=iterations,
                solve_seconds=elapsed,
                attempts=attempts,
            )

        if cvx.status in _FEASIBLE_STATUSES and x.value is not None:
            xv = np.asarray(x.value, dtype=float) if problem.n_x else np.zeros(0)
            values = problem.unpack(xv)
            audit = check_solution(problem.constraints, values, tol=options.audit_tol)
            solution = SdpSolution(
                status=SolveStatus.FEASIBLE if audit.passed else SolveStatus.NUMERICAL_FAILURE,
                values=values,
                audit=audit,
                solver=name,
                solver_status=cvx.status,
                iterations=iterations,
                solve_seconds=elapsed,
                attempts=attempts,
            )
            if audit.passed:
                return solution
            worst = audit.worst
            logger.debug(
                f"{name}: audit failed on {len(audit.failures())} constraint(s)"
                + (f", worst {worst.name} margin {worst.margin:.3e}" if worst else "")
            )
            last = solution

    if last is not None:
        last.attempts = attempts
        return last
    return SdpSolution(status=SolveStatus.NUMERICAL_FAILURE, attempts=attempts)
