"""End-to-end pendulum benchmark: synthesis, simulations, certification, report."""

from pathlib import Path
from typing import Any, Optional, Union

import numpy as np

from .. import __version__
from ..errors import DivergenceError
from ..output.report import ReportWriter
from ..performance.dissipativity import certify
from ..pipeline import disturbance_spec, dump_problem, initial_states, prepare, run_synthesis
from ..simulation.closed_loop import (
    Trajectory,
    attenuation_ratio,
    integrate,
    trajectory_metrics,
    zero_gains,
)
from ..utils.config import RunConfig
from ..utils.logger import get_logger
from .pendulum import REFERENCE_GAMMA, reference_comparison

# Every n-th sample of the margin curves goes into the report
CURVE_STRIDE = 100


def _open_loop(config: RunConfig, system: Any, x0: list[np.ndarray], dist: Any) -> tuple[Trajectory, bool]:
    sim = config.simulation
    try:
        traj = integrate(
            system, zero_gains(system), x0, dist, T=sim.open_loop_horizon, dt=sim.dt, blowup=sim.blowup
        )
        return traj, False
    except DivergenceError as e:
        return e.trajectory, True


def run_benchmark_scenario(
    config: Optional[RunConfig] = None,
    out_dir: Optional[Union[str, Path]] = None,
    verbose: bool = False,
) -> dict[str, Any]:
    """
    Run the pendulum scenario and write its artifacts.

    Writes ``report.json``, ``gains.csv``, ``open_loop.csv``,
    ``closed_loop.csv``, ``from_rest.csv`` and ``bisection.csv``; wall-clock
    figures go to ``timings.json`` only.

    Args:
        config: Run configuration (benchmark defaults when omitted)
        out_dir: Output directory overriding ``config.output.directory``
        verbose: Enable verbose logging

    Returns:
        The report written to ``report.json``

    Raises:
        InfeasibleError: If the synthesis conditions are infeasible
        SolverFailure: If no backend produced an audited solution
        DivergenceError: If the closed loop diverges
    """
    config = config or RunConfig.from_mapping({"command": "bench"})
    logger = get_logger(verbose=verbose)
    writer = ReportWriter(out_dir or config.output.directory, digits=config.output.float_digits, verbose=verbose)
    sim = config.simulation
    timings: dict[str, float] = {}

    logger.section("Partition")
    with logger.timed("partition") as t:
        system, partition, audit = prepare(config, verbose=verbose)
    timings["partition"] = t["seconds"]

    logger.section("Synthesis")
    with logger.timed("synthesis") as t:
        result = run_synthesis(config, system, partition, verbose=verbose)
    timings["synthesis"] = t["seconds"]
    if config.output.dump_sdpa:
        dump_problem(config, system, partition, writer.directory / "problem.dat-s", perf=result.performance)

    x0 = initial_states(config, system)
    dist = disturbance_spec(config, system)

    logger.section("Simulation")
    with logger.timed("simulation") as t:
        open_loop, diverged = _open_loop(config, system, x0, dist)
        closed_loop = integrate(system, result.gains, x0, dist, T=sim.horizon, dt=sim.dt, blowup=sim.blowup)
        at_rest = [np.zeros_like(x) for x in x0]
        from_rest = integrate(system, result.gains, at_rest, dist, T=sim.horizon, dt=sim.dt, blowup=sim.blowup)
    timings["simulation"] = t["seconds"]

    norms = open_loop.state_norms()
    growth = float(norms[-1] / norms[0]) if norms[0] > 0 else float("inf")
    if growth <= 10.0 and not diverged:
        logger.warning(f"open loop grew only by a factor {growth:.3g} over {open_loop.times[-1]:.3g} s")

    certification: dict[str, Any] = {}
    if result.performance is not None:
        certification = {
            "closed_loop": certify(closed_loop, result.performance, X=result.X).to_dict(CURVE_STRIDE),
            "from_rest": certify(from_rest, result.performance, X=result.X).to_dict(CURVE_STRIDE),
        }

    ratio = attenuation_ratio(from_rest)
    report = {
        "version": __version__,
        "seed": config.seed,
        "config": config.to_dict(),
        "partition": partition.summary(),
        "envelope_audit": audit.to_dict(),
        "synthesis": result.to_dict(),
        "open_loop": {
            **trajectory_metrics(open_loop),
            "diverged": diverged,
            "growth_factor": growth,
        },
        "closed_loop": trajectory_metrics(closed_loop),
        "from_rest": {
            **trajectory_metrics(from_rest),
            "attenuation_ratio": ratio,
            "gamma": result.gamma,
            "within_gamma": None if result.gamma is None else ratio <= result.gamma * (1.0 + 1e-3),
        },
        "certification": certification,
        "reference": reference_comparison(result.gains, result.gamma),
    }

    writer.json("report.json", report)
    writer.csv("gains.csv", result.gains_frame())
    writer.csv("open_loop.csv", open_loop.to_frame())
    writer.csv("closed_loop.csv", closed_loop.to_frame())
    writer.csv("from_rest.csv", from_rest.to_frame())
    writer.csv("bisection.csv", result.trace_frame())
    writer.timings(timings)

    final = trajectory_metrics(closed_loop)["final_norm"]
    logger.summary(
        "Benchmark complete",
        [
            f"gamma = {result.gamma:.4g} (reference {REFERENCE_GAMMA})"
            if result.gamma is not None
            else "disturbance-free synthesis",
            f"open-loop growth x{growth:.3g}",
            f"closed-loop |x(T)| = {final:.3e}",
            f"attenuation ratio {ratio:.4g}",
        ],
    )
    return report
