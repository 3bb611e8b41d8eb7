"""Run configuration: dataclasses, file parsing and validation.

Configuration files are JSON. Files that are not valid JSON are read with
``yaml.safe_load``, so the same schema written as YAML is accepted too. Unknown
keys are rejected with a ``path.to.field`` diagnostic.
"""

import dataclasses
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Optional, Union

import yaml

from ..errors import ModelInputError

COMMANDS = ("synth", "simulate", "verify", "bench")
PRESETS = ("h-infinity", "energy-to-peak", "passivity", "very-strict-passivity", "qsr")
THEOREMS = ("extended-dissipativity", "disturbance-free")
BUILTIN_PENDULUM = "builtin:pendulum"


@dataclass
class PerformanceConfig:
    """Performance index selection."""

    # One of PRESETS
    preset: str = "h-infinity"

    # Preset parameters, e.g. {"gamma": 1.0} or {"Q": ..., "S": ..., "R": ..., "alpha": ...}
    params: dict[str, Any] = field(default_factory=lambda: {"gamma": 1.0})

    # Override of the preset rho (None keeps the preset value)
    rho: Optional[float] = None

    # Bisect gamma instead of checking the given one (h-infinity only)
    minimize_gamma: bool = True


@dataclass
class PartitionConfig:
    """State-box and sub-FOU partition parameters."""

    # Box bounds: flat list shared by all subsystems, or one list per subsystem
    lower: Optional[list[Any]] = None
    upper: Optional[list[Any]] = None

    # Cells per state dimension (int applies to every dimension)
    q_per_dim: Union[int, list[int]] = 4

    # Sub-FOU count is tau + 1
    tau: int = 0

    # Sampling lattice per cell and dimension (corners included)
    samples_per_cell: int = 9

    # Widening applied to sampled extrema
    margin: float = 1e-9

    # Refine sampled extrema with bounded local optimisation
    polish: bool = True

    # Audit lattice density relative to the sampling lattice
    audit_density: int = 10


@dataclass
class SynthesisConfig:
    """LMI synthesis options."""

    theorem: str = "extended-dissipativity"
    tau0: float = 1.0
    tau_i: Optional[list[float]] = None
    epsilon: float = 1e-6
    gamma_bracket: list[float] = field(default_factory=lambda: [1e-3, 1e3])
    gamma_tol: float = 1e-2

    # Optional bound on every recovered gain's spectral norm
    gain_bound: Optional[float] = None
    x_floor: float = 0.1

    solver: str = "CLARABEL"
    fallback_solvers: list[str] = field(default_factory=lambda: ["SCS"])


@dataclass
class SimulationConfig:
    """Closed-loop integration options."""

    horizon: float = 20.0
    dt: float = 1e-3
    blowup: float = 1e8

    # One initial state per subsystem
    initial_states: Optional[list[list[float]]] = None

    # One disturbance signal spec per subsystem, e.g.
    # {"kind": "decaying-sinusoid", "a": 0.8, "b": 0.2, "c": 0.2}
    disturbances: Optional[list[dict[str, Any]]] = None

    # Open-loop evidence horizon used by the benchmark
    open_loop_horizon: float = 5.0

    # Gain table CSV for `simulate`; None runs the open loop (G = 0)
    gains: Optional[str] = None


@dataclass
class OutputConfig:
    """Output generation options."""

    directory: str = "results"

    # Significant digits kept in JSON reports
    float_digits: int = 12

    # Also dump assembled problems in SDPA sparse format
    dump_sdpa: bool = False


@dataclass
class RunConfig:
    """Complete configuration of one CLI run."""

    command: str = "bench"
    model: Optional[str] = None
    seed: int = 0
    performance: PerformanceConfig = field(default_factory=PerformanceConfig)
    partition: PartitionConfig = field(default_factory=PartitionConfig)
    synthesis: SynthesisConfig = field(default_factory=SynthesisConfig)
    simulation: SimulationConfig = field(default_factory=SimulationConfig)
    output: OutputConfig = field(default_factory=OutputConfig)

    # Directory relative paths resolve against; not part of the schema
    base_dir: Optional[Path] = field(default=None, repr=False, compare=False)

    @classmethod
    def from_mapping(cls, data: Optional[dict[str, Any]], base_dir: Optional[Path] = None) -> "RunConfig":
        """
        Build and validate a configuration from a parsed mapping.

        Args:
            data: Parsed configuration (None yields the defaults)
            base_dir: Directory used to resolve relative paths

        Returns:
            Validated RunConfig

        Raises:
            ModelInputError: On unknown keys, wrong types or out-of-range values
        """
        config = _build(cls, data or {}, path="")
        config.base_dir = base_dir
        config.validate()
        return config

    @classmethod
    def from_file(cls, path: Path) -> "RunConfig":
        """
        Load configuration from a JSON (or YAML) file.

        Raises:
            FileNotFoundError: If the file doesn't exist
            ModelInputError: If the file is malformed or fails validation
        """
        path = Path(path)
        if not path.exists():
            raise FileNotFoundError(f"Configuration file not found: {path}")
        try:
            text = path.read_text()
            try:
                data = json.loads(text)
            except json.JSONDecodeError:
                # PyYAML reads exponent floats such as 1e-06 as strings, so JSON goes first
                data = yaml.safe_load(text)
        except yaml.YAMLError as e:
            raise ModelInputError(f"Failed to parse configuration file {path}: {e}")
        if data is not None and not isinstance(data, dict):
            raise ModelInputError("<root>: expected an object")
        return cls.from_mapping(data, base_dir=path.resolve().parent)

    def to_dict(self) -> dict[str, Any]:
        """Schema-shaped mapping (no base_dir)."""
        data = dataclasses.asdict(self)
        data.pop("base_dir", None)
        return data

    def to_file(self, path: Path) -> None:
        """Write the normalised configuration as JSON."""
        with open(path, "w") as f:
            json.dump(self.to_dict(), f, indent=2)
            f.write("\n")

    def resolve(self, relative: str) -> Path:
        """Resolve a path from the file against the configuration directory."""
        p = Path(relative)
        if p.is_absolute() or self.base_dir is None:
            return p
        return self.base_dir / p

    @property
    def uses_builtin_pendulum(self) -> bool:
        return self.model is None or self.model == BUILTIN_PENDULUM

    def validate(self) -> None:
        """
        Check ranges and cross-field requirements.

        Raises:
            ModelInputError: Naming the offending field
        """
        if self.command not in COMMANDS:
            raise ModelInputError(f"command: expected one of {COMMANDS}, got {self.command!r}")
        if self.command in ("synth", "simulate") and self.model is None:
            raise ModelInputError(f"model: required for command {self.command!r}")
        if self.model is not None and self.model != BUILTIN_PENDULUM:
            if not self.resolve(self.model).exists():
                raise ModelInputError(f"model: file not found: {self.model}")

        perf = self.performance
        if perf.preset not in PRESETS:
            raise ModelInputError(f"performance.preset: expected one of {PRESETS}, got {perf.preset!r}")
        if perf.minimize_gamma and perf.preset != "h-infinity":
            raise ModelInputError(
                "performance.minimize_gamma: gamma bisection requires the h-infinity preset"
            )

        part = self.partition
        counts = [part.q_per_dim] if isinstance(part.q_per_dim, int) else list(part.q_per_dim)
        if not counts or any(int(q) < 1 for q in counts):
            raise ModelInputError("partition.q_per_dim: cell counts must be >= 1")
        if part.tau < 0:
            raise ModelInputError("partition.tau: must be >= 0")
        if part.samples_per_cell < 8:
            raise ModelInputError("partition.samples_per_cell: must be >= 8")
        if part.margin < 0:
            raise ModelInputError("partition.margin: must be >= 0")
        if part.audit_density < 1:
            raise ModelInputError("partition.audit_density: must be >= 1")
        if (part.lower is None) != (part.upper is None):
            raise ModelInputError("partition.lower/upper: give both bounds or neither")

        syn = self.synthesis
        if syn.theorem not in THEOREMS:
            raise ModelInputError(f"synthesis.theorem: expected one of {THEOREMS}, got {syn.theorem!r}")
        if syn.tau0 <= 0:
            raise ModelInputError("synthesis.tau0: must be positive")
        if syn.tau_i is not None and any(t < syn.tau0 for t in syn.tau_i):
            raise ModelInputError("synthesis.tau_i: every entry must be >= tau0")
        if syn.epsilon <= 0:
            raise ModelInputError("synthesis.epsilon: must be positive")
        if len(syn.gamma_bracket) != 2 or not 0 < syn.gamma_bracket[0] < syn.gamma_bracket[1]:
            raise ModelInputError("synthesis.gamma_bracket: expected [lower, upper] with 0 < lower < upper")
        if syn.gamma_tol <= 0:
            raise ModelInputError("synthesis.gamma_tol: must be positive")
        if syn.gain_bound is not None and syn.gain_bound <= 0:
            raise ModelInputError("synthesis.gain_bound: must be positive")
        if syn.x_floor <= 0:
            raise ModelInputError("synthesis.x_floor: must be positive")

        sim = self.simulation
        if sim.dt <= 0:
            raise ModelInputError("simulation.dt: must be positive")
        if sim.horizon < sim.dt:
            raise ModelInputError("simulation.horizon: must be >= dt")
        if sim.open_loop_horizon < sim.dt:
            raise ModelInputError("simulation.open_loop_horizon: must be >= dt")
        if sim.blowup <= 0:
            raise ModelInputError("simulation.blowup: must be positive")
        if sim.gains is not None and not self.resolve(sim.gains).exists():
            raise ModelInputError(f"simulation.gains: file not found: {sim.gains}")

        if self.output.float_digits < 1:
            raise ModelInputError("output.float_digits: must be >= 1")


_NESTED = {
    "performance": PerformanceConfig,
    "partition": PartitionConfig,
    "synthesis": SynthesisConfig,
    "simulation": SimulationConfig,
    "output": OutputConfig,
}

_NUMERIC_FIELDS = {
    "tau0", "epsilon", "gamma_tol", "gain_bound", "x_floor", "horizon", "dt",
    "blowup", "open_loop_horizon", "margin", "rho",
}
_INTEGER_FIELDS = {"seed", "tau", "samples_per_cell", "audit_density", "float_digits"}


def _build(cls: type, data: dict[str, Any], path: str) -> Any:
    """Instantiate a config dataclass from a mapping, rejecting unknown keys."""
    if not isinstance(data, dict):
        raise ModelInputError(f"{path or '<root>'}: expected an object, got {type(data).__name__}")

    known = {f.name for f in dataclasses.fields(cls) if f.name != "base_dir"}
    unknown = sorted(set(data) - known)
    if unknown:
        where = f"{path}." if path else ""
        raise ModelInputError(f"{where}{unknown[0]}: unknown key")

    kwargs: dict[str, Any] = {}
    for key, value in data.items():
        field_path = f"{path}.{key}" if path else key
        if path == "" and key in _NESTED:
            kwargs[key] = _build(_NESTED[key], value if value is not None else {}, field_path)
            continue
        if key in _NUMERIC_FIELDS and value is not None:
            if isinstance(value, bool) or not isinstance(value, (int, float)):
                raise ModelInputError(f"{field_path}: expected a number, got {value!r}")
            value = float(value)
        if key in _INTEGER_FIELDS:
            if isinstance(value, bool) or not isinstance(value, int):
                raise ModelInputError(f"{field_path}: expected an integer, got {value!r}")
        kwargs[key] = value
    return cls(**kwargs)


def parse_config(path: Path) -> RunConfig:
    """
    Parse and validate a run configuration file.

    Args:
        path: Path to the JSON configuration

    Returns:
        Fully validated RunConfig with defaults filled
    """
    return RunConfig.from_file(Path(path))


def load_config(config_path: Optional[Path] = None, command: Optional[str] = None) -> RunConfig:
    """
    Load configuration from file or return defaults.

    Args:
        config_path: Optional path to configuration file
        command: Command that overrides the file's ``command`` field

    Returns:
        RunConfig instance
    """
    if config_path is not None:
        config = parse_config(config_path)
    else:
        config = RunConfig.from_mapping({})
    if command is not None and command != config.command:
        config.command = command
        config.validate()
    return config


def create_default_config(output_path: Path) -> None:
    """Write the default (benchmark) configuration file."""
    RunConfig().to_file(output_path)
