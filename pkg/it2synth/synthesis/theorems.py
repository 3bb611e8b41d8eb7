"""Assembly of the membership-function-dependent LMI families.

Coordinates are ``g_i = P_i x_i`` with ``X_i = P_i^{-1}`` and
``zeta_i = [g_i; w_i]``. For every rule pair (l, j) of subsystem i the
matrix ``Omega_ilj`` is the grade-free part of ``dV/dt - J`` in these
coordinates, with both quadratic terms lifted by a Schur complement:

* interconnections: ``sqrt((N - 1) * sum_k abar_ki^2) * [X_i, 0]`` at weight tau0;
* output weighting: ``L [C_il X_i, D_2il]`` at weight 1, ``L' L = -psi1``.

The base block is::

    [ He(A X + B N_j) + tau_i I     D1 - X C' psi2       ]
    [ *                             -He(D2' psi2) - psi3 ]

Constraint families (names used in reports):

* ``slack_positive``     W_iljz > 0
* ``slack_shifted``      Omega_ilj + W_iljz + M_i > 0
* ``membership_relaxed`` per cell, distinct corner and slice choice:
  ``sum_lj (dbar Omega + (dbar - dlow) W + dbar M) - M < 0``
* ``output_bound``       [[-K, C' phi^1/2], [*, -I]] < 0 per rule
* ``storage_bound``      [[-X, X], [*, K - 2I]] < 0
* ``positivity``         diag(X, K) > 0
* ``peak_bound``         [[X, X C' phi^1/2], [*, I]] > 0 per rule, only with phi != 0
* ``gain_bound``         X >= x_floor I and ||N_ij|| <= gain_bound * x_floor
"""

import itertools
from dataclasses import dataclass, field
from typing import Any, Optional

import numpy as np

from ..errors import AssemblyError, ModelInputError
from ..fuzzy.model import LargeScaleSystem
from ..lmi import (
    AffineBlockMatrix,
    Constraint,
    DecisionVar,
    Sense,
    SolverOptions,
    he,
    schur_linearize,
    selector,
)
from ..partition.fou import FouPartition
from ..performance.dissipativity import PerformanceSpec, validate_assumption1
from ..utils.logger import get_logger

THEOREMS = ("extended-dissipativity", "disturbance-free")


@dataclass
class SynthesisOptions:
    """Relaxation scalars, margins and bisection settings."""

    tau0: float = 1.0
    tau_i: Optional[list[float]] = None
    epsilon: float = 1e-6
    gamma_bracket: tuple[float, float] = (1e-3, 1e3)
    gamma_tol: float = 1e-2
    theorem: str = "extended-dissipativity"
    gain_bound: Optional[float] = None
    x_floor: float = 0.1
    solver: SolverOptions = field(default_factory=SolverOptions)

    def __post_init__(self) -> None:
        """Validate option ranges."""
        if not self.tau0 > 0:
            raise ModelInputError(f"tau0 must be positive, got {self.tau0}")
        if self.tau_i is not None and any(t < self.tau0 for t in self.tau_i):
            raise ModelInputError(f"every tau_i must be >= tau0 = {self.tau0}, got {self.tau_i}")
        lo, hi = (float(v) for v in self.gamma_bracket)
        if not 0 < lo < hi:
            raise ModelInputError(f"gamma bracket must satisfy 0 < lower < upper, got {self.gamma_bracket}")
        self.gamma_bracket = (lo, hi)
        if not 0 < self.gamma_tol < 1:
            raise ModelInputError(f"gamma_tol must be in (0, 1), got {self.gamma_tol}")
        if not self.epsilon > 0:
            raise ModelInputError(f"epsilon must be positive, got {self.epsilon}")
        if self.theorem not in THEOREMS:
            raise ModelInputError(f"theorem must be one of {', '.join(THEOREMS)}, got {self.theorem!r}")
        if self.gain_bound is not None and not self.gain_bound > 0:
            raise ModelInputError(f"gain_bound must be positive, got {self.gain_bound}")
        if not self.x_floor > 0:
            raise ModelInputError(f"x_floor must be positive, got {self.x_floor}")

    def tau_for(self, i: int, n_subsystems: int) -> float:
        if self.tau_i is None:
            return float(self.tau0)
        if len(self.tau_i) != n_subsystems:
            raise ModelInputError(f"tau_i has {len(self.tau_i)} entries, system has {n_subsystems} subsystems")
        return float(self.tau_i[i])


def interconnection_bound(system: LargeScaleSystem, k: int, i: int) -> float:
    """
    Largest spectral norm over the rules of subsystem k of its coupling from x_i.

    Grades are convex weights, so this bounds every grade-weighted mix.
    Absent couplings give 0.

    Raises:
        ModelInputError: On invalid or equal indices
    """
    if not (0 <= k < system.N and 0 <= i < system.N) or k == i:
        raise ModelInputError(f"interconnection bound needs two distinct subsystems, got ({k}, {i})")
    norms = [
        float(np.linalg.norm(rule.interconnections[i], 2))
        for rule in system.subsystems[k].rules
        if i in rule.interconnections
    ]
    return max(norms, default=0.0)


def interconnection_table(system: LargeScaleSystem) -> np.ndarray:
    """(N, N) table abar[k, i]; zero diagonal."""
    table = np.zeros((system.N, system.N))
    for k in range(system.N):
        for i in range(system.N):
            if k != i:
                table[k, i] = interconnection_bound(system, k, i)
    return table


@dataclass
class SubsystemLayout:
    """Variables and lifted block layout of one subsystem."""

    index: int
    X: DecisionVar
    M: DecisionVar
    N: list[DecisionVar]
    W: dict[tuple[int, int, int], DecisionVar]
    K: Optional[DecisionVar] = None
    block_sizes: list[int] = field(default_factory=list)
    coupling_weight: float = 0.0
    tau: float = 1.0


@dataclass
class LmiFamily:
    """Assembled constraints with their variables and bookkeeping."""

    theorem: str
    constraints: list[Constraint]
    variables: list[DecisionVar]
    layouts: list[SubsystemLayout]
    omegas: dict[tuple[int, int, int], AffineBlockMatrix]
    abar: np.ndarray
    performance: Optional[PerformanceSpec] = None

    def counts(self) -> dict[str, int]:
        out: dict[str, int] = {}
        for c in self.constraints:
            out[c.family] = out.get(c.family, 0) + 1
        return dict(sorted(out.items()))

    def summary(self) -> dict[str, Any]:
        return {
            "theorem": self.theorem,
            "variables": len(self.variables),
            "constraints": len(self.constraints),
            "families": self.counts(),
            "lifted_sizes": [sum(layout.block_sizes) for layout in self.layouts],
        }


class _Builder:
    """Shared machinery for both theorems."""

    def __init__(
        self,
        system: LargeScaleSystem,
        partition: FouPartition,
        opts: SynthesisOptions,
        theorem: str,
        perf: Optional[PerformanceSpec],
        verbose: bool,
    ) -> None:
        partition.check_compatible(system)
        self.system = system
        self.partition = partition
        self.opts = opts
        self.theorem = theorem
        self.perf = perf
        self.logger = get_logger(verbose=verbose)
        self.abar = interconnection_table(system)
        self.constraints: list[Constraint] = []
        self.variables: list[DecisionVar] = []
        self.omegas: dict[tuple[int, int, int], AffineBlockMatrix] = {}

    def declare(self, var: DecisionVar) -> DecisionVar:
        self.variables.append(var)
        return var

    def add(self, name: str, family: str, matrix: AffineBlockMatrix, sense: Sense, tags: tuple = ()) -> None:
        self.constraints.append(
            Constraint(
                name=name,
                matrix=matrix,
                sense=sense,
                family=family,
                tags=tags,
                relative_epsilon=self.opts.epsilon,
            )
        )

    def coupling_weight(self, i: int) -> float:
        """(N - 1) * sum_k abar_ki^2."""
        return float((self.system.N - 1) * np.sum(self.abar[:, i] ** 2))

    def lifted_sizes(self, i: int) -> list[int]:
        sub = self.system.subsystems[i]
        sizes = [sub.n] if self.perf is None else [sub.n, sub.m_w]
        if self.coupling_weight(i) > 0.0:
            sizes.append(sub.n)
        if self.perf is not None and self._output_lift(i) is not None:
            sizes.append(self.perf.psi1_factor().shape[0])
        return sizes

    def _output_lift(self, i: int) -> Optional[np.ndarray]:
        assert self.perf is not None
        L = self.perf.psi1_factor()
        if L.shape[0] == 0:
            return None
        rules = self.system.subsystems[i].rules
        if not any(np.any(r.C) or np.any(r.D2) for r in rules):
            return None
        return L

    def declare_subsystem(self, i: int, with_k: bool) -> SubsystemLayout:
        sub = self.system.subsystems[i]
        p, c = sub.p, self.system.controllers[i].c
        d = sum(self.lifted_sizes(i))
        X = self.declare(DecisionVar.sym(f"X[{i}]", sub.n, tags=(i,)))
        K = self.declare(DecisionVar.sym(f"K[{i}]", sub.n, tags=(i,))) if with_k else None
        M = self.declare(DecisionVar.sym(f"M[{i}]", d, tags=(i,)))
        N = [self.declare(DecisionVar.rect(f"N[{i},{j}]", sub.m, sub.n, tags=(i, j))) for j in range(c)]
        W = {
            (l, j, z): self.declare(DecisionVar.sym(f"W[{i},{l},{j},{z}]", d, tags=(i, l, j, z)))
            for l in range(p)
            for j in range(c)
            for z in range(self.partition.tau_plus_1)
        }
        return SubsystemLayout(
            index=i,
            X=X,
            K=K,
            M=M,
            N=N,
            W=W,
            block_sizes=self.lifted_sizes(i),
            coupling_weight=self.coupling_weight(i),
            tau=self.opts.tau_for(i, self.system.N),
        )

    def omega(self, layout: SubsystemLayout, l: int, j: int) -> AffineBlockMatrix:
        i = layout.index
        sub = self.system.subsystems[i]
        rule = sub.rules[l]
        X = layout.X.expr()
        N = layout.N[j].expr()
        top = he(rule.A @ X + rule.B @ N) + layout.tau * np.eye(sub.n)

        if self.perf is None:
            base = AffineBlockMatrix.symmetric([[top]])
        else:
            psi2 = self.perf.psi2
            off = rule.D1 - X @ (rule.C.T @ psi2)
            corner = -(rule.D2.T @ psi2 + psi2.T @ rule.D2) - self.perf.psi3
            base = AffineBlockMatrix.symmetric([[top, off], [corner]])

        lifts = []
        E0 = selector(base.sizes, 0)
        if layout.coupling_weight > 0.0:
            lifts.append((np.sqrt(layout.coupling_weight) * (X @ E0.T), self.opts.tau0))
        if self.perf is not None:
            L = self._output_lift(i)
            if L is not None:
                E1 = selector(base.sizes, 1)
                lifts.append((L @ ((rule.C @ X) @ E0.T + rule.D2 @ E1.T), 1.0))

        omega = schur_linearize(base, lifts)
        if omega.sizes != layout.block_sizes:
            raise AssemblyError(
                f"subsystem {i}: lifted layout {omega.sizes} differs from declared {layout.block_sizes}"
            )
        self.omegas[(i, l, j)] = omega
        return omega

    def relaxation(self, layout: SubsystemLayout) -> None:
        """Slack families and the corner-wise membership relaxation."""
        i = layout.index
        sub = self.system.subsystems[i]
        p, c = sub.p, self.system.controllers[i].c
        sizes = layout.block_sizes
        M = AffineBlockMatrix.split(sizes, layout.M.expr())
        W = {key: AffineBlockMatrix.split(sizes, v.expr()) for key, v in layout.W.items()}
        omegas = {(l, j): self.omega(layout, l, j) for l in range(p) for j in range(c)}

        for (l, j, z), Wm in W.items():
            self.add(f"slack_positive[{i},{l},{j},{z}]", "slack_positive", Wm, Sense.POSITIVE, (i, l, j, z))
            self.add(
                f"slack_shifted[{i},{l},{j},{z}]",
                "slack_shifted",
                omegas[(l, j)] + Wm + M,
                Sense.POSITIVE,
                (i, l, j, z),
            )

        box = self.partition.boxes[i]
        lo_tab = self.partition.delta_lower[i]
        hi_tab = self.partition.delta_upper[i]
        pairs = [(l, j) for l in range(p) for j in range(c)]
        choices = list(itertools.product(range(self.partition.tau_plus_1), repeat=len(pairs)))
        pruned = 0
        for cell in range(box.q):
            corners = self.partition.distinct_corners(i, cell)
            for choice in choices:
                corners_lo = np.array(
                    [[lo_tab[l, j, cell, k, z] for (l, j), z in zip(pairs, choice)] for k in corners]
                )
                corners_hi = np.array(
                    [[hi_tab[l, j, cell, k, z] for (l, j), z in zip(pairs, choice)] for k in corners]
                )
                # the slice choice cannot carry grades summing to one anywhere in the cell
                if np.all(corners_lo.sum(axis=1) > 1.0) or np.all(corners_hi.sum(axis=1) < 1.0):
                    pruned += 1
                    continue
                tag = "".join(str(z) for z in choice)
                for row, k in enumerate(corners):
                    dlo, dhi = corners_lo[row], corners_hi[row]
                    mats = [omegas[pair] for pair in pairs]
                    mats += [W[(l, j, z)] for (l, j), z in zip(pairs, choice)]
                    mats.append(M)
                    weights = list(dhi) + list(dhi - dlo) + [float(dhi.sum()) - 1.0]
                    self.add(
                        f"membership_relaxed[{i},{cell},{k},{tag}]",
                        "membership_relaxed",
                        AffineBlockMatrix.weighted_sum(mats, weights),
                        Sense.NEGATIVE,
                        (i, cell, k, choice),
                    )
        if pruned:
            self.logger.debug(f"subsystem {i}: {pruned} slice choice(s) pruned")

    def gain_bounds(self, layout: SubsystemLayout) -> None:
        if self.opts.gain_bound is None:
            return
        i = layout.index
        sub = self.system.subsystems[i]
        xf = self.opts.x_floor
        scale = self.opts.gain_bound * xf
        self.add(
            f"gain_bound[{i},X]",
            "gain_bound",
            AffineBlockMatrix.single(layout.X.expr() - xf * np.eye(sub.n)),
            Sense.POSITIVE_SEMI,
            (i,),
        )
        for j, Nv in enumerate(layout.N):
            mat = AffineBlockMatrix.symmetric(
                [[scale * np.eye(sub.m), Nv.expr()], [scale * np.eye(sub.n)]]
            )
            self.add(f"gain_bound[{i},N{j}]", "gain_bound", mat, Sense.POSITIVE_SEMI, (i, j))

    def family(self, layouts: list[SubsystemLayout]) -> LmiFamily:
        return LmiFamily(
            theorem=self.theorem,
            constraints=self.constraints,
            variables=self.variables,
            layouts=layouts,
            omegas=self.omegas,
            abar=self.abar,
            performance=self.perf,
        )


def _check_performance(system: LargeScaleSystem, perf: PerformanceSpec) -> None:
    report = validate_assumption1(perf, system)
    if not report.is_valid:
        raise AssemblyError(
            "performance weights violate the standing assumptions "
            f"(items {report.failed_items()}{'; ' + report.errors[0] if report.errors else ''})",
            details=report.to_dict(),
        )


def assemble_theorem1(
    system: LargeScaleSystem,
    partition: FouPartition,
    perf: PerformanceSpec,
    opts: Optional[SynthesisOptions] = None,
    verbose: bool = False,
) -> LmiFamily:
    """
    Extended-dissipativity synthesis conditions.

    Args:
        system: Large-scale IT2 system
        partition: Membership-bound tables over the state boxes
        perf: Performance weights shared by every subsystem
        opts: Relaxation scalars and margins

    Returns:
        LmiFamily with the constraint families listed in the module docstring

    Raises:
        AssemblyError: If the weights violate the standing assumptions
        PartitionError: If the partition does not match the system
    """
    opts = opts or SynthesisOptions()
    _check_performance(system, perf)
    builder = _Builder(system, partition, opts, "extended-dissipativity", perf, verbose)
    root_phi = perf.phi_sqrt()

    layouts = []
    for sub in system.subsystems:
        i = sub.index
        layout = builder.declare_subsystem(i, with_k=True)
        layouts.append(layout)
        builder.relaxation(layout)

        X, K = layout.X.expr(), layout.K.expr()  # type: ignore[union-attr]
        I_n = np.eye(sub.n)
        for l, rule in enumerate(sub.rules):
            coupling = rule.C.T @ root_phi
            builder.add(
                f"output_bound[{i},{l}]",
                "output_bound",
                AffineBlockMatrix.symmetric([[-K, coupling], [-np.eye(sub.n_z)]]),
                Sense.NEGATIVE,
                (i, l),
            )
            if perf.has_peak_term:
                builder.add(
                    f"peak_bound[{i},{l}]",
                    "peak_bound",
                    AffineBlockMatrix.symmetric([[X, X @ coupling], [np.eye(sub.n_z)]]),
                    Sense.POSITIVE,
                    (i, l),
                )
        builder.add(
            f"storage_bound[{i}]",
            "storage_bound",
            AffineBlockMatrix.symmetric([[-X, X], [K - 2.0 * I_n]]),
            Sense.NEGATIVE,
            (i,),
        )
        builder.add(
            f"positivity[{i}]",
            "positivity",
            AffineBlockMatrix.symmetric([[X, None], [K]]),
            Sense.POSITIVE,
            (i,),
        )
        builder.gain_bounds(layout)

    family = builder.family(layouts)
    builder.logger.debug(f"assembled {len(family.constraints)} constraints: {family.counts()}")
    return family


def assemble_theorem2(
    system: LargeScaleSystem,
    partition: FouPartition,
    opts: Optional[SynthesisOptions] = None,
    verbose: bool = False,
) -> LmiFamily:
    """
    Disturbance-free stabilization conditions.

    Same relaxation as :func:`assemble_theorem1` with ``Omega`` reduced to the
    state block plus the interconnection lift, and no output weighting.
    """
    opts = opts or SynthesisOptions(theorem="disturbance-free")
    builder = _Builder(system, partition, opts, "disturbance-free", None, verbose)
    layouts = []
    for sub in system.subsystems:
        i = sub.index
        layout = builder.declare_subsystem(i, with_k=False)
        layouts.append(layout)
        builder.relaxation(layout)
        builder.add(
            f"positivity[{i}]",
            "positivity",
            AffineBlockMatrix.single(layout.X.expr()),
            Sense.POSITIVE,
            (i,),
        )
        builder.gain_bounds(layout)
    return builder.family(layouts)


def expected_counts(
    system: LargeScaleSystem,
    partition: FouPartition,
    perf: Optional[PerformanceSpec] = None,
    gain_bound: bool = False,
) -> dict[str, int]:
    """
    Closed-form constraint tally before slice pruning.

    The membership family counts one constraint per (cell, distinct corner,
    slice choice); pruning can only lower it for tau > 0.
    """
    counts: dict[str, int] = {}

    def bump(name: str, amount: int) -> None:
        counts[name] = counts.get(name, 0) + amount

    for sub in system.subsystems:
        i = sub.index
        p, c = sub.p, system.controllers[i].c
        box = partition.boxes[i]
        t1 = partition.tau_plus_1
        bump("slack_positive", p * c * t1)
        bump("slack_shifted", p * c * t1)
        corners = sum(len(partition.distinct_corners(i, cell)) for cell in range(box.q))
        bump("membership_relaxed", corners * t1 ** (p * c))
        bump("positivity", 1)
        if perf is not None:
            bump("output_bound", p)
            bump("storage_bound", 1)
            if perf.has_peak_term:
                bump("peak_bound", p)
        if gain_bound:
            bump("gain_bound", 1 + c)
    return dict(sorted(counts.items()))


def assemble(
    system: LargeScaleSystem,
    partition: FouPartition,
    perf: Optional[PerformanceSpec],
    opts: SynthesisOptions,
    verbose: bool = False,
) -> LmiFamily:
    """Dispatch on ``opts.theorem``."""
    if opts.theorem == "disturbance-free":
        return assemble_theorem2(system, partition, opts, verbose=verbose)
    if perf is None:
        raise AssemblyError("extended-dissipativity synthesis needs performance weights")
    return assemble_theorem1(system, partition, perf, opts, verbose=verbose)


def variable_tally(family: LmiFamily) -> dict[str, int]:
    """Symmetric and rectangular variable counts."""
    return {
        "symmetric": sum(v.symmetric for v in family.variables),
        "rectangular": sum(not v.symmetric for v in family.variables),
    }
