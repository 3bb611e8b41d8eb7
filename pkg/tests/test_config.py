"""Tests for run configuration parsing and validation."""

import json
import tempfile
from pathlib import Path

import pytest

from it2synth.errors import ModelInputError
from it2synth.utils.config import (
    RunConfig,
    create_default_config,
    load_config,
    parse_config,
)

SHIPPED = Path(__file__).parent.parent / "it2synth" / "configs" / "pendulum.json"


@pytest.fixture
def temp_dir():
    with tempfile.TemporaryDirectory() as tmpdir:
        yield Path(tmpdir)


def _write(path, data):
    path.write_text(json.dumps(data))
    return path


class TestDefaults:
    """Test default values."""

    def test_defaults(self):
        config = RunConfig.from_mapping(None)
        assert config.command == "bench"
        assert config.uses_builtin_pendulum
        assert config.performance.preset == "h-infinity"
        assert config.partition.q_per_dim == 4
        assert config.synthesis.epsilon == 1e-6
        assert config.simulation.dt == 1e-3
        assert config.output.float_digits == 12

    def test_load_without_file(self):
        config = load_config(None, command="verify")
        assert config.command == "verify"


class TestValidation:
    """Test schema and range checks."""

    def test_unknown_nested_key(self):
        with pytest.raises(ModelInputError, match="partition.cells: unknown key"):
            RunConfig.from_mapping({"partition": {"cells": 3}})

    def test_unknown_root_key(self):
        with pytest.raises(ModelInputError, match="solver: unknown key"):
            RunConfig.from_mapping({"solver": "SCS"})

    def test_synth_needs_model(self):
        with pytest.raises(ModelInputError, match="model: required"):
            RunConfig.from_mapping({"command": "synth"})

    def test_command_override_revalidates(self):
        with pytest.raises(ModelInputError, match="model: required"):
            load_config(None, command="simulate")

    def test_missing_model_file(self, temp_dir):
        with pytest.raises(ModelInputError, match="model: file not found"):
            RunConfig.from_mapping({"model": "absent.json"}, base_dir=temp_dir)

    def test_unknown_command(self):
        with pytest.raises(ModelInputError, match="command"):
            RunConfig.from_mapping({"command": "plot"})

    def test_number_type_checked(self):
        with pytest.raises(ModelInputError, match="simulation.dt: expected a number"):
            RunConfig.from_mapping({"simulation": {"dt": "fast"}})

    def test_integer_type_checked(self):
        with pytest.raises(ModelInputError, match="partition.tau: expected an integer"):
            RunConfig.from_mapping({"partition": {"tau": 1.5}})

    def test_sparse_sampling_rejected(self):
        with pytest.raises(ModelInputError, match="samples_per_cell"):
            RunConfig.from_mapping({"partition": {"samples_per_cell": 4}})

    def test_bisection_needs_h_infinity(self):
        with pytest.raises(ModelInputError, match="minimize_gamma"):
            RunConfig.from_mapping({"performance": {"preset": "passivity", "minimize_gamma": True}})

    def test_bracket_order(self):
        with pytest.raises(ModelInputError, match="gamma_bracket"):
            RunConfig.from_mapping({"synthesis": {"gamma_bracket": [10.0, 1.0]}})

    def test_one_sided_bounds(self):
        with pytest.raises(ModelInputError, match="lower/upper"):
            RunConfig.from_mapping({"partition": {"lower": [-1.0, -1.0]}})

    def test_tau_i_below_tau0(self):
        with pytest.raises(ModelInputError, match="tau_i"):
            RunConfig.from_mapping({"synthesis": {"tau0": 2.0, "tau_i": [1.0, 3.0]}})


class TestFiles:
    """Test reading and writing configuration files."""

    def test_shipped_config(self):
        config = parse_config(SHIPPED)
        assert config.model == "builtin:pendulum"
        assert config.performance.minimize_gamma
        assert config.synthesis.epsilon == 1e-6
        assert isinstance(config.synthesis.epsilon, float)
        assert config.simulation.initial_states == [[1.2, 0.0], [0.8, 0.0]]
        assert config.simulation.disturbances[0]["a"] == 0.8

    def test_round_trip(self, temp_dir):
        config = parse_config(SHIPPED)
        path = temp_dir / "copy.json"
        config.to_file(path)
        assert RunConfig.from_file(path) == config

    def test_yaml_accepted(self, temp_dir):
        path = temp_dir / "run.yaml"
        path.write_text("command: bench\npartition:\n  q_per_dim: 3\nsimulation:\n  horizon: 5.0\n")
        config = RunConfig.from_file(path)
        assert config.partition.q_per_dim == 3
        assert config.simulation.horizon == 5.0

    def test_relative_model_path(self, temp_dir):
        (temp_dir / "model.json").write_text("{}")
        config = RunConfig.from_file(_write(temp_dir / "run.json", {"command": "synth", "model": "model.json"}))
        assert config.resolve(config.model) == temp_dir.resolve() / "model.json"

    def test_missing_file(self, temp_dir):
        with pytest.raises(FileNotFoundError):
            RunConfig.from_file(temp_dir / "absent.json")

    def test_non_object_root(self, temp_dir):
        path = temp_dir / "list.json"
        path.write_text("[1, 2]")
        with pytest.raises(ModelInputError, match="expected an object"):
            RunConfig.from_file(path)

    def test_create_default_config(self, temp_dir):
        path = temp_dir / "default.json"
        create_default_config(path)
        data = json.loads(path.read_text())
        assert data["command"] == "bench"
        assert "base_dir" not in data
        assert RunConfig.from_file(path) == RunConfig()
