"""Tests for the command-line interface."""

import json
import tempfile
from pathlib import Path

import numpy as np
import pytest
from click.testing import CliRunner

from it2synth import __version__
from it2synth.cli import main
from it2synth.simulation.closed_loop import Trajectory, save_trajectory


@pytest.fixture
def runner():
    return CliRunner()


@pytest.fixture
def temp_dir():
    with tempfile.TemporaryDirectory() as tmpdir:
        yield Path(tmpdir)


def _write_config(path, data):
    path.write_text(json.dumps(data))
    return path


class TestInfoCommands:
    """Test commands that do not run the pipeline."""

    def test_version(self, runner):
        result = runner.invoke(main, ["version"])
        assert result.exit_code == 0
        assert f"it2synth v{__version__}" in result.output

    def test_init_config(self, runner, temp_dir):
        path = temp_dir / "config.json"
        result = runner.invoke(main, ["init-config", str(path)])
        assert result.exit_code == 0
        assert json.loads(path.read_text())["command"] == "bench"

    def test_help_lists_commands(self, runner):
        result = runner.invoke(main, ["--help"])
        assert result.exit_code == 0
        for name in ("synth", "simulate", "verify", "bench", "init-config"):
            assert name in result.output


class TestExitCodes:
    """Test error mapping to exit codes and diagnostics."""

    def test_bad_config_exits_2(self, runner, temp_dir):
        config = _write_config(temp_dir / "bad.json", {"partition": {"cells": 3}})
        out = temp_dir / "out"
        result = runner.invoke(main, ["synth", "-c", str(config), "-o", str(out)])
        assert result.exit_code == 2
        diagnostic = json.loads((out / "diagnostic.json").read_text())
        assert diagnostic["error"] == "ModelInputError"
        assert diagnostic["exit_code"] == 2
        assert diagnostic["command"] == "synth"

    def test_synth_without_model_exits_2(self, runner, temp_dir):
        result = runner.invoke(main, ["synth", "-o", str(temp_dir)])
        assert result.exit_code == 2
        assert "model: required" in json.loads((temp_dir / "diagnostic.json").read_text())["message"]

    def test_infeasible_synthesis_exits_6(self, runner, temp_dir):
        model = {
            "subsystems": [{"rules": [{"A": [[1.0]], "B": [[0.0]]}]}],
            "controllers": [{"rules": [{"antecedents": []}]}],
        }
        (temp_dir / "model.json").write_text(json.dumps(model))
        config = _write_config(
            temp_dir / "run.json",
            {
                "command": "synth",
                "model": "model.json",
                "partition": {"lower": [-1.0], "upper": [1.0], "q_per_dim": 1},
                "synthesis": {"theorem": "disturbance-free"},
            },
        )
        out = temp_dir / "out"
        result = runner.invoke(main, ["synth", "-c", str(config), "-o", str(out)])
        assert result.exit_code == 6
        diagnostic = json.loads((out / "diagnostic.json").read_text())
        assert diagnostic["error"] == "InfeasibleError"
        assert not (out / "gains.csv").exists()

    def test_open_loop_simulation_diverges(self, runner, temp_dir):
        config = _write_config(
            temp_dir / "open.json",
            {"command": "simulate", "model": "builtin:pendulum", "simulation": {"horizon": 20.0}},
        )
        out = temp_dir / "out"
        result = runner.invoke(main, ["simulate", "-c", str(config), "-o", str(out)])
        assert result.exit_code == 8
        diagnostic = json.loads((out / "diagnostic.json").read_text())
        assert diagnostic["error"] == "DivergenceError"
        assert (out / "trajectory.csv").exists()
        assert not (out / "metrics.json").exists()


class TestSimulate:
    """Test a short open-loop simulation."""

    def test_short_horizon_succeeds(self, runner, temp_dir):
        config = _write_config(
            temp_dir / "short.json",
            {"command": "simulate", "model": "builtin:pendulum", "simulation": {"horizon": 0.5}},
        )
        out = temp_dir / "out"
        result = runner.invoke(main, ["simulate", "-c", str(config), "-o", str(out)])
        assert result.exit_code == 0
        metrics = json.loads((out / "metrics.json").read_text())
        assert metrics["samples"] == 501
        assert (out / "trajectory.csv").exists()


class TestVerify:
    """Test certification of stored trajectories."""

    def _trajectory(self, temp_dir, z_level):
        times = np.linspace(0.0, 1.0, 101)
        traj = Trajectory(
            times=times,
            states=[np.zeros((101, 2))],
            inputs=[np.zeros((101, 1))],
            outputs=[z_level * np.ones((101, 1))],
            disturbances=[np.ones((101, 1))],
        )
        path = temp_dir / "trajectory.csv"
        save_trajectory(traj, path)
        return path

    def test_passing_trajectory(self, runner, temp_dir):
        path = self._trajectory(temp_dir, 0.5)
        out = temp_dir / "out"
        result = runner.invoke(main, ["verify", "-t", str(path), "-o", str(out)])
        assert result.exit_code == 0
        report = json.loads((out / "certification.json").read_text())
        assert report["preset"] == "h-infinity"
        assert report["rho"]["preset"]["passed"] is True
        assert report["trajectory"] == "trajectory.csv"

    def test_failing_trajectory_still_exits_0(self, runner, temp_dir):
        path = self._trajectory(temp_dir, 2.0)
        out = temp_dir / "out"
        result = runner.invoke(main, ["verify", "-t", str(path), "-o", str(out)])
        assert result.exit_code == 0
        report = json.loads((out / "certification.json").read_text())
        assert report["rho"]["preset"]["passed"] is False
        assert report["min_margin"] < 0.0

    def test_missing_trajectory_option(self, runner):
        result = runner.invoke(main, ["verify"])
        assert result.exit_code != 0
