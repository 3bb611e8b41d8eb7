"""Controller design: solve the assembled conditions, recover gains, minimize gamma."""

from dataclasses import dataclass, field
from typing import Any, Optional, Sequence

import numpy as np
import pandas as pd

from ..errors import InfeasibleError, SolverFailure
from ..fuzzy.model import LargeScaleSystem
from ..lmi import SolutionAudit, SolveStatus, SdpSolution, solve_feasibility, to_feasibility
from ..partition.fou import FouPartition
from ..performance.dissipativity import PerformanceSpec, preset
from ..utils.logger import get_logger
from .theorems import LmiFamily, SynthesisOptions, assemble

# Condition number above which recovered gains are flagged
COND_LIMIT = 1e12


@dataclass
class BisectionStep:
    """One feasibility trial of the gamma search."""

    gamma: float
    status: str
    margin: float

    def to_dict(self) -> dict[str, Any]:
        return {"gamma": self.gamma, "status": self.status, "margin": self.margin}


def is_monotone(trace: Sequence[BisectionStep]) -> bool:
    """True when no trial is infeasible above a feasible gamma."""
    ordered = sorted(trace, key=lambda s: s.gamma)
    seen_feasible = False
    for step in ordered:
        if step.status == SolveStatus.FEASIBLE.value:
            seen_feasible = True
        elif seen_feasible:
            return False
    return True


@dataclass
class SynthesisResult:
    """Decision-variable values, gains and audit of a successful synthesis."""

    theorem: str
    X: list[np.ndarray]
    M: list[np.ndarray]
    N: list[list[np.ndarray]]
    W: dict[tuple[int, int, int, int], np.ndarray]
    gains: list[list[np.ndarray]]
    audit: SolutionAudit
    abar: np.ndarray
    counts: dict[str, int]
    K: Optional[list[np.ndarray]] = None
    performance: Optional[PerformanceSpec] = None
    gamma: Optional[float] = None
    solver: str = ""
    storage_margins: list[float] = field(default_factory=list)
    trace: list[BisectionStep] = field(default_factory=list)
    conditioning: list[float] = field(default_factory=list)

    @property
    def P(self) -> list[np.ndarray]:
        return [np.linalg.inv(X) for X in self.X]

    def gains_frame(self) -> pd.DataFrame:
        """One row per (subsystem, controller rule, gain row)."""
        rows = []
        for i, per_rule in enumerate(self.gains):
            for j, G in enumerate(per_rule):
                for r, values in enumerate(G):
                    row: dict[str, Any] = {"subsystem": i, "rule": j, "row": r}
                    row.update({f"g{c}": float(v) for c, v in enumerate(values)})
                    rows.append(row)
        return pd.DataFrame(rows)

    def trace_frame(self) -> pd.DataFrame:
        return pd.DataFrame([s.to_dict() for s in self.trace], columns=["gamma", "status", "margin"])

    def to_dict(self) -> dict[str, Any]:
        """Deterministic report content (no timings)."""
        return {
            "theorem": self.theorem,
            "gamma": self.gamma,
            "performance": self.performance.to_dict() if self.performance is not None else None,
            "gains": [[G.tolist() for G in per_rule] for per_rule in self.gains],
            "X": [X.tolist() for X in self.X],
            "K": [K.tolist() for K in self.K] if self.K is not None else None,
            "N": [[N.tolist() for N in per_rule] for per_rule in self.N],
            "interconnection_bounds": self.abar.tolist(),
            "constraint_counts": dict(self.counts),
            "margins_by_family": self.audit.by_family(),
            "min_margin": min((c.margin for c in self.audit.checks), default=None),
            "audit_passed": self.audit.passed,
            "storage_margins": list(self.storage_margins),
            "condition_numbers": list(self.conditioning),
            "solver": self.solver,
            "bisection": [s.to_dict() for s in self.trace],
            "bisection_monotone": is_monotone(self.trace) if self.trace else None,
        }


def recover_gains(
    X: Sequence[np.ndarray],
    N: Sequence[Sequence[np.ndarray]],
    verbose: bool = False,
) -> tuple[list[list[np.ndarray]], list[float]]:
    """
    Gains ``G_ij = N_ij X_i^{-1}``.

    Returns:
        Tuple of (gains per subsystem and controller rule, condition number
        of each X_i)
    """
    logger = get_logger(verbose=verbose)
    gains = []
    conds = []
    for i, (Xi, per_rule) in enumerate(zip(X, N)):
        cond = float(np.linalg.cond(Xi))
        conds.append(cond)
        if cond > COND_LIMIT:
            logger.warning(f"X[{i}] is ill-conditioned (cond = {cond:.3e}); gains may be inaccurate")
        # G X = N with X symmetric
        gains.append([np.linalg.solve(Xi, Nij.T).T for Nij in per_rule])
    return gains, conds


def _solve_family(
    family: LmiFamily, opts: SynthesisOptions, verbose: bool
) -> SdpSolution:
    problem = to_feasibility(family.constraints, family.variables)
    return solve_feasibility(problem, opts.solver, verbose=verbose)


def _result_from(
    family: LmiFamily, solution: SdpSolution, verbose: bool
) -> SynthesisResult:
    values = solution.values
    X, M, N, K = [], [], [], []
    W: dict[tuple[int, int, int, int], np.ndarray] = {}
    for layout in family.layouts:
        i = layout.index
        X.append(values[layout.X.name])
        M.append(values[layout.M.name])
        N.append([values[v.name] for v in layout.N])
        if layout.K is not None:
            K.append(values[layout.K.name])
        for (l, j, z), var in layout.W.items():
            W[(i, l, j, z)] = values[var.name]

    gains, conds = recover_gains(X, N, verbose=verbose)
    storage = []
    if K:
        # P - K >= 0 is checked after the fact
        storage = [float(np.linalg.eigvalsh(np.linalg.inv(Xi) - Ki)[0]) for Xi, Ki in zip(X, K)]
        if min(storage) < 0.0:
            get_logger(verbose=verbose).warning(
                f"P_i - K_i is not positive semidefinite (smallest eigenvalue {min(storage):.3e})"
            )

    perf = family.performance
    assert solution.audit is not None
    return SynthesisResult(
        theorem=family.theorem,
        X=X,
        M=M,
        N=N,
        W=W,
        K=K or None,
        gains=gains,
        audit=solution.audit,
        abar=family.abar,
        counts=family.counts(),
        performance=perf,
        gamma=perf.gamma if perf is not None else None,
        solver=solution.solver,
        storage_margins=storage,
        conditioning=conds,
    )


def synthesize(
    system: LargeScaleSystem,
    partition: FouPartition,
    perf: Optional[PerformanceSpec] = None,
    opts: Optional[SynthesisOptions] = None,
    verbose: bool = False,
) -> SynthesisResult:
    """
    Assemble, solve and audit one synthesis problem.

    Args:
        system: Large-scale IT2 system
        partition: Membership-bound tables
        perf: Performance weights (ignored for the disturbance-free theorem)
        opts: Synthesis options

    Returns:
        SynthesisResult with gains and the eigenvalue audit

    Raises:
        InfeasibleError: If the solver proves the conditions infeasible
        SolverFailure: If no backend produced an audited solution
    """
    opts = opts or SynthesisOptions()
    logger = get_logger(verbose=verbose)
    family = assemble(system, partition, perf, opts, verbose=verbose)
    logger.info(f"Solving {len(family.constraints)} constraints in {len(family.variables)} variables")
    solution = _solve_family(family, opts, verbose)

    if solution.status == SolveStatus.INFEASIBLE:
        raise InfeasibleError(
            "synthesis conditions are infeasible",
            details={"solver": solution.solver, "counts": family.counts()},
        )
    if solution.status != SolveStatus.FEASIBLE:
        details: dict[str, Any] = {"attempts": solution.attempts}
        if solution.audit is not None and solution.audit.worst is not None:
            details["worst"] = solution.audit.worst.to_dict()
        raise SolverFailure("no solver produced a solution that passes the audit", details=details)

    logger.success(f"Feasible ({solution.solver}), min margin {solution.min_margin:.3e}")
    return _result_from(family, solution, verbose)


def minimize_gamma(
    system: LargeScaleSystem,
    partition: FouPartition,
    opts: Optional[SynthesisOptions] = None,
    base: Optional[PerformanceSpec] = None,
    verbose: bool = False,
) -> tuple[float, SynthesisResult]:
    """
    Geometric bisection on the attenuation level.

    Args:
        system: Large-scale IT2 system
        partition: Membership-bound tables
        opts: Options; ``gamma_bracket`` and ``gamma_tol`` drive the search
        base: Preset to scale (h-infinity with the system's dimensions by default)

    Returns:
        Tuple of (smallest feasible gamma found, its SynthesisResult with the
        bisection trace attached)

    Raises:
        InfeasibleError: If the top of the bracket is infeasible
    """
    opts = opts or SynthesisOptions()
    logger = get_logger(verbose=verbose)
    if base is None:
        sub0 = system.subsystems[0]
        base = preset("h-infinity", n_z=sub0.n_z, m_w=sub0.m_w, gamma=1.0)

    trace: list[BisectionStep] = []
    best: Optional[SynthesisResult] = None

    def trial(gamma: float) -> bool:
        nonlocal best
        perf = base.with_gamma(gamma)
        family = assemble(system, partition, perf, opts, verbose=False)
        solution = _solve_family(family, opts, verbose)
        margin = solution.min_margin
        trace.append(BisectionStep(gamma=gamma, status=solution.status.value, margin=margin))
        if solution.status == SolveStatus.NUMERICAL_FAILURE:
            logger.warning(f"gamma = {gamma:.6g}: numerical failure, treated as infeasible")
        if solution.status == SolveStatus.FEASIBLE:
            best = _result_from(family, solution, verbose)
            return True
        return False

    lo, hi = opts.gamma_bracket
    logger.info(f"Bisection on gamma in [{lo:g}, {hi:g}], relative tolerance {opts.gamma_tol:g}")
    with logger.nested():
        if not trial(hi):
            raise InfeasibleError(
                f"infeasible at the top of the gamma bracket ({hi:g})",
                details={"bracket": [lo, hi], "trace": [s.to_dict() for s in trace]},
            )
        best_gamma = hi
        if trial(lo):
            best_gamma = lo
        else:
            while hi / lo - 1.0 > opts.gamma_tol:
                mid = float(np.sqrt(lo * hi))
                if trial(mid):
                    hi = best_gamma = mid
                else:
                    lo = mid
                logger.debug(f"gamma in [{lo:.6g}, {hi:.6g}]")

    # feasible trials only ever lower best_gamma, so the last one is the reported optimum
    assert best is not None
    best.trace = trace
    if not is_monotone(trace):
        logger.warning("feasibility along the gamma search is not monotone")
    logger.success(f"gamma_min = {best_gamma:.6g} after {len(trace)} trials")
    return best_gamma, best
