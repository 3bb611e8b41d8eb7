"""Command-line interface for IT2 fuzzy large-scale controller synthesis."""

import sys
import traceback
from pathlib import Path
from typing import Any, Callable, Optional

import click

from . import __version__
from .bench.scenario import run_benchmark_scenario
from .errors import DivergenceError, It2SynthError
from .output.report import ReportWriter, read_gains
from .performance.dissipativity import certify
from .pipeline import (
    disturbance_spec,
    dump_problem,
    initial_states,
    load_system,
    performance_spec,
    prepare,
    run_synthesis,
)
from .simulation.closed_loop import integrate, load_trajectory, trajectory_metrics, zero_gains
from .utils.config import RunConfig, create_default_config, load_config
from .utils.logger import get_logger, set_verbose

# Shipped benchmark configuration
PENDULUM_CONFIG = Path(__file__).parent / "configs" / "pendulum.json"

# Every n-th sample of a margin curve goes into certification.json
CURVE_STRIDE = 10


def run_options(func: Callable[..., Any]) -> Callable[..., Any]:
    """Options shared by every command that runs the pipeline."""
    options = [
        click.option(
            "--config", "-c",
            "config_path",
            type=click.Path(exists=True, dir_okay=False, path_type=Path),
            default=None,
            help="Run configuration (JSON)",
        ),
        click.option(
            "--out", "-o",
            type=click.Path(file_okay=False, path_type=Path),
            default=None,
            help="Output directory (overrides output.directory)",
        ),
        click.option("--seed", type=int, default=None, help="Random seed (overrides seed)"),
        click.option("--verbose", "-v", is_flag=True, help="Enable verbose output"),
        click.option("--quiet", "-q", is_flag=True, help="Quiet mode (warnings and errors only)"),
    ]
    for option in reversed(options):
        func = option(func)
    return func


def _execute(
    command: str,
    config_path: Optional[Path],
    out: Optional[Path],
    seed: Optional[int],
    verbose: bool,
    quiet: bool,
    body: Callable[[RunConfig, ReportWriter, bool], None],
) -> None:
    """
    Load the configuration, run ``body`` and map failures to exit codes.

    Domain errors write ``diagnostic.json`` into the output directory and exit
    with the error's code; anything else exits with 1.
    """
    verbose_mode = verbose and not quiet
    set_verbose(verbose_mode)
    logger = get_logger()
    logger.banner("it2synth", __version__)

    writer = ReportWriter(out or Path("results"), verbose=verbose_mode)
    try:
        config = load_config(config_path, command=command)
        if seed is not None:
            config.seed = seed
        if out is not None:
            config.output.directory = str(out)
        writer = ReportWriter(config.output.directory, digits=config.output.float_digits, verbose=verbose_mode)
        logger.info(f"Command: {command}")
        logger.info(f"Output directory: {writer.directory}")
        if config_path:
            logger.info(f"Configuration: {config_path}")

        body(config, writer, verbose_mode)

    except It2SynthError as e:
        logger.error(f"{type(e).__name__}: {e.message}")
        path = writer.diagnostic(e, extra={"command": command})
        logger.info(f"Diagnostic written to {path}")
        sys.exit(e.exit_code)
    except Exception as e:
        logger.error(f"Unexpected failure: {e}")
        if verbose_mode:
            traceback.print_exc()
        sys.exit(1)


@click.group()
@click.version_option(version=__version__)
def main() -> None:
    """it2synth - IT2 fuzzy large-scale controller synthesis and verification."""
    pass


@main.command()
@run_options
def synth(
    config_path: Optional[Path], out: Optional[Path], seed: Optional[int], verbose: bool, quiet: bool
) -> None:
    """Synthesize controller gains for the configured model."""

    def body(config: RunConfig, writer: ReportWriter, verbose_mode: bool) -> None:
        logger = get_logger()
        timings: dict[str, float] = {}

        logger.section("Partition")
        with logger.timed("partition") as t:
            system, partition, audit = prepare(config, verbose=verbose_mode)
        timings["partition"] = t["seconds"]

        logger.section("Synthesis")
        with logger.timed("synthesis") as t:
            result = run_synthesis(config, system, partition, verbose=verbose_mode)
        timings["synthesis"] = t["seconds"]

        writer.json(
            "result.json",
            {
                "version": __version__,
                "seed": config.seed,
                "config": config.to_dict(),
                "partition": partition.summary(),
                "envelope_audit": audit.to_dict(),
                "synthesis": result.to_dict(),
            },
        )
        writer.csv("gains.csv", result.gains_frame())
        if result.trace:
            writer.csv("bisection.csv", result.trace_frame())
        if config.output.dump_sdpa:
            dump_problem(config, system, partition, writer.directory / "problem.dat-s", perf=result.performance)
        writer.timings(timings)

        logger.summary(
            "Synthesis complete",
            [f"gamma = {result.gamma:.6g}" if result.gamma is not None else f"theorem: {result.theorem}"]
            + [str(p) for p in writer.written],
        )

    _execute("synth", config_path, out, seed, verbose, quiet, body)


@main.command()
@run_options
def simulate(
    config_path: Optional[Path], out: Optional[Path], seed: Optional[int], verbose: bool, quiet: bool
) -> None:
    """
    Integrate the closed loop with stored gains.

    Without ``simulation.gains`` the open loop (G = 0) is integrated. On
    divergence the partial trajectory is still written.
    """

    def body(config: RunConfig, writer: ReportWriter, verbose_mode: bool) -> None:
        logger = get_logger()
        sim = config.simulation
        system = load_system(config, verbose=verbose_mode)
        if sim.gains is not None:
            gains = read_gains(config.resolve(sim.gains))
            logger.info(f"Gains: {sim.gains}")
        else:
            gains = zero_gains(system)
            logger.info("No gains given; integrating the open loop")

        x0 = initial_states(config, system)
        dist = disturbance_spec(config, system)
        try:
            trajectory = integrate(system, gains, x0, dist, T=sim.horizon, dt=sim.dt, blowup=sim.blowup)
        except DivergenceError as e:
            if e.trajectory is not None:
                writer.csv("trajectory.csv", e.trajectory.to_frame())
            raise

        writer.csv("trajectory.csv", trajectory.to_frame())
        metrics = trajectory_metrics(trajectory)
        writer.json("metrics.json", metrics)
        logger.summary(
            "Simulation complete",
            [f"|x(T)| = {metrics['final_norm']:.4e}", f"peak |x| = {metrics['peak_norm']:.4e}"],
        )

    _execute("simulate", config_path, out, seed, verbose, quiet, body)


@main.command()
@click.option(
    "--trajectory", "-t",
    "trajectory_path",
    type=click.Path(exists=True, dir_okay=False, path_type=Path),
    required=True,
    help="Trajectory CSV written by simulate or bench",
)
@run_options
def verify(
    trajectory_path: Path,
    config_path: Optional[Path],
    out: Optional[Path],
    seed: Optional[int],
    verbose: bool,
    quiet: bool,
) -> None:
    """Certify a stored trajectory against the configured performance preset."""

    def body(config: RunConfig, writer: ReportWriter, verbose_mode: bool) -> None:
        logger = get_logger()
        trajectory = load_trajectory(trajectory_path)
        n_z = trajectory.outputs[0].shape[1] if trajectory.outputs else 1
        m_w = trajectory.disturbances[0].shape[1] if trajectory.disturbances else 1
        spec = performance_spec(config, n_z, m_w)
        report = certify(trajectory, spec)

        writer.json(
            "certification.json",
            {"trajectory": trajectory_path.name, **report.to_dict(CURVE_STRIDE)},
        )
        if report.passes_preset:
            logger.success(f"Certified: min margin {report.min_margin:.4e} >= rho {report.rho_preset:g}")
        else:
            logger.warning(
                f"Not certified: min margin {report.min_margin:.4e} < rho {report.rho_preset:g} "
                f"at t = {report.argmin_time:.4g} s"
            )

    _execute("verify", config_path, out, seed, verbose, quiet, body)


@main.group()
def bench() -> None:
    """Reference benchmarks."""
    pass


@bench.command()
@run_options
def pendulum(
    config_path: Optional[Path], out: Optional[Path], seed: Optional[int], verbose: bool, quiet: bool
) -> None:
    """
    Double inverted pendulum: synthesis, simulations and certification.

    Uses the shipped benchmark configuration unless --config is given.
    """

    def body(config: RunConfig, writer: ReportWriter, verbose_mode: bool) -> None:
        run_benchmark_scenario(config, writer.directory, verbose=verbose_mode)

    _execute("bench", config_path or PENDULUM_CONFIG, out, seed, verbose, quiet, body)


@main.command("init-config")
@click.argument("output_path", type=click.Path(dir_okay=False, path_type=Path))
def init_config(output_path: Path) -> None:
    """
    Create a default configuration file.

    OUTPUT_PATH: Path to save configuration file (e.g., config.json)
    """
    logger = get_logger(verbose=False)

    try:
        create_default_config(output_path)
        click.echo(f"Created default configuration: {output_path}")
    except OSError as e:
        logger.error(f"Failed to create config: {e}")
        sys.exit(1)


@main.command()
def version() -> None:
    """Show version information."""
    click.echo(f"it2synth v{__version__}")
    click.echo("Interval type-2 fuzzy large-scale controller synthesis")


if __name__ == "__main__":
    main()
