"""Turn a validated RunConfig into models, partitions, options and results.

Shared by the CLI commands and the pendulum benchmark.
"""

from pathlib import Path
from typing import Any, Optional

import numpy as np

from .bench.pendulum import INITIAL_STATES, build_system, default_partition_box, scenario_disturbances
from .errors import ModelInputError, PartitionError
from .fuzzy.loader import ModelLoader
from .fuzzy.model import LargeScaleSystem
from .fuzzy.validator import ModelValidator
from .lmi import to_feasibility, write_sdpa
from .lmi.solver import SolverOptions
from .partition.fou import EnvelopeAudit, FouPartition, StateBox, audit_envelope, build_partition
from .performance.dissipativity import PerformanceSpec, preset
from .simulation.closed_loop import DisturbanceSpec
from .synthesis.design import SynthesisResult, minimize_gamma, synthesize
from .synthesis.theorems import SynthesisOptions, assemble
from .utils.config import RunConfig
from .utils.logger import get_logger


def load_system(config: RunConfig, verbose: bool = False) -> LargeScaleSystem:
    """Built-in pendulum or the model file named in the configuration."""
    if config.uses_builtin_pendulum:
        return build_system()
    assert config.model is not None
    return ModelLoader(verbose=verbose).load(config.resolve(config.model))


def _per_subsystem(value: list[Any], n_subsystems: int, name: str) -> list[list[float]]:
    if value and all(isinstance(v, (list, tuple)) for v in value):
        if len(value) != n_subsystems:
            raise ModelInputError(f"partition.{name}: {len(value)} bounds for {n_subsystems} subsystems")
        return [list(map(float, v)) for v in value]
    return [list(map(float, value))] * n_subsystems


def state_boxes(config: RunConfig, system: LargeScaleSystem) -> list[StateBox]:
    """
    Partition boxes from the configuration.

    Raises:
        ModelInputError: If no bounds are given for a model other than the
            built-in pendulum, or their widths mismatch the state dimensions
    """
    part = config.partition
    if part.lower is None or part.upper is None:
        if not config.uses_builtin_pendulum:
            raise ModelInputError("partition.lower: required for models other than the built-in pendulum")
        return default_partition_box(q_per_dim=part.q_per_dim)

    lowers = _per_subsystem(part.lower, system.N, "lower")
    uppers = _per_subsystem(part.upper, system.N, "upper")
    boxes = []
    for sub, lo, hi in zip(system.subsystems, lowers, uppers):
        if len(lo) != sub.n or len(hi) != sub.n:
            raise ModelInputError(
                f"partition.lower/upper: subsystem {sub.index} has {sub.n} states, "
                f"bounds have {len(lo)} and {len(hi)} entries"
            )
        counts = np.broadcast_to(part.q_per_dim, (sub.n,)).tolist()
        boxes.append(StateBox(tuple(lo), tuple(hi), tuple(counts)))
    return boxes


def build_run_partition(
    config: RunConfig, system: LargeScaleSystem, verbose: bool = False
) -> FouPartition:
    part = config.partition
    return build_partition(
        system,
        state_boxes(config, system),
        tau=part.tau,
        samples_per_cell=part.samples_per_cell,
        margin=part.margin,
        polish=part.polish,
        verbose=verbose,
    )


def prepare(
    config: RunConfig, verbose: bool = False
) -> tuple[LargeScaleSystem, FouPartition, EnvelopeAudit]:
    """
    Load and validate the model, partition it and audit the envelope.

    The audit lattice's random states come from ``config.seed``.

    Raises:
        ModelInputError: If the model fails validation
        PartitionError: If the partition audit finds an escaped grade
    """
    logger = get_logger(verbose=verbose)
    system = load_system(config, verbose=verbose)
    boxes = state_boxes(config, system)
    check = ModelValidator(verbose=verbose).validate(
        system, boxes=[(np.asarray(b.lower), np.asarray(b.upper)) for b in boxes]
    )
    if check.has_errors():
        raise ModelInputError("model validation failed", details={"errors": check.errors})

    partition = build_run_partition(config, system, verbose=verbose)
    audit = audit_envelope(
        partition,
        system,
        density=config.partition.audit_density,
        rng=np.random.default_rng(config.seed),
    )
    if not audit.passed:
        raise PartitionError(
            f"membership envelope escapes its bounds by {-audit.worst_margin:.3e}",
            details=audit.to_dict(),
        )
    logger.success(f"Envelope audit passed on {audit.n_points} points (worst margin {audit.worst_margin:.3e})")
    return system, partition, audit


def synthesis_options(config: RunConfig) -> SynthesisOptions:
    syn = config.synthesis
    return SynthesisOptions(
        tau0=syn.tau0,
        tau_i=syn.tau_i,
        epsilon=syn.epsilon,
        gamma_bracket=(syn.gamma_bracket[0], syn.gamma_bracket[1]),
        gamma_tol=syn.gamma_tol,
        theorem=syn.theorem,
        gain_bound=syn.gain_bound,
        x_floor=syn.x_floor,
        solver=SolverOptions(solver=syn.solver, fallback_solvers=list(syn.fallback_solvers)),
    )


def performance_spec(config: RunConfig, n_z: int, m_w: int) -> PerformanceSpec:
    """Configured preset for output width ``n_z`` and disturbance width ``m_w``."""
    perf = config.performance
    spec = preset(perf.preset, n_z=n_z, m_w=m_w, **perf.params)
    if perf.rho is not None:
        spec = spec.with_rho(perf.rho)
    return spec


def initial_states(config: RunConfig, system: LargeScaleSystem) -> list[np.ndarray]:
    raw = config.simulation.initial_states
    if raw is None:
        if not config.uses_builtin_pendulum:
            raise ModelInputError("simulation.initial_states: required for models other than the built-in pendulum")
        raw = [list(x) for x in INITIAL_STATES]
    if len(raw) != system.N:
        raise ModelInputError(f"simulation.initial_states: {len(raw)} states for {system.N} subsystems")
    states = []
    for sub, x in zip(system.subsystems, raw):
        if len(x) != sub.n:
            raise ModelInputError(
                f"simulation.initial_states: subsystem {sub.index} needs {sub.n} entries, got {len(x)}"
            )
        states.append(np.asarray(x, dtype=float))
    return states


def disturbance_spec(config: RunConfig, system: LargeScaleSystem) -> DisturbanceSpec:
    raw = config.simulation.disturbances
    if raw is None:
        return scenario_disturbances() if config.uses_builtin_pendulum else DisturbanceSpec.zero(system.N)
    if len(raw) != system.N:
        raise ModelInputError(f"simulation.disturbances: {len(raw)} signals for {system.N} subsystems")
    return DisturbanceSpec.from_dicts(raw)


def run_synthesis(
    config: RunConfig,
    system: LargeScaleSystem,
    partition: FouPartition,
    verbose: bool = False,
) -> SynthesisResult:
    """
    Synthesize with the configured theorem; bisect gamma when asked to.

    Raises:
        InfeasibleError: If the conditions (or the top of the gamma bracket)
            are infeasible
        SolverFailure: If no backend produced an audited solution
    """
    opts = synthesis_options(config)
    if opts.theorem == "disturbance-free":
        return synthesize(system, partition, None, opts, verbose=verbose)
    perf = performance_spec(config, system.subsystems[0].n_z, system.subsystems[0].m_w)
    if config.performance.minimize_gamma:
        _, result = minimize_gamma(system, partition, opts, base=perf, verbose=verbose)
        return result
    return synthesize(system, partition, perf, opts, verbose=verbose)


def dump_problem(
    config: RunConfig,
    system: LargeScaleSystem,
    partition: FouPartition,
    path: Path,
    perf: Optional[PerformanceSpec] = None,
) -> Path:
    """Write the assembled conditions in SDPA sparse format."""
    opts = synthesis_options(config)
    if perf is None and opts.theorem != "disturbance-free":
        perf = performance_spec(config, system.subsystems[0].n_z, system.subsystems[0].m_w)
    family = assemble(system, partition, perf, opts)
    path.parent.mkdir(parents=True, exist_ok=True)
    write_sdpa(to_feasibility(family.constraints, family.variables), path)
    get_logger().debug(f"wrote {path}")
    return path
