"""Shared fixtures: the pendulum benchmark and its synthesis."""

from dataclasses import replace
from pathlib import Path

import pytest

from it2synth.bench.pendulum import build_system, default_partition_box
from it2synth.partition.fou import build_partition
from it2synth.pipeline import synthesis_options
from it2synth.synthesis.design import minimize_gamma, synthesize
from it2synth.utils.config import RunConfig

PENDULUM_CONFIG = Path(__file__).parent.parent / "it2synth" / "configs" / "pendulum.json"


@pytest.fixture(scope="session")
def pendulum_system():
    return build_system()


@pytest.fixture(scope="session")
def pendulum_partition(pendulum_system):
    return build_partition(pendulum_system, default_partition_box(q_per_dim=4), tau=0, samples_per_cell=9)


@pytest.fixture(scope="session")
def pendulum_config():
    return RunConfig.from_file(PENDULUM_CONFIG)


@pytest.fixture(scope="session")
def pendulum_synthesis(pendulum_system, pendulum_partition, pendulum_config):
    """(gamma_min, SynthesisResult) of the benchmark configuration."""
    return minimize_gamma(pendulum_system, pendulum_partition, synthesis_options(pendulum_config))


@pytest.fixture(scope="session")
def pendulum_disturbance_free(pendulum_system, pendulum_partition, pendulum_config):
    opts = replace(synthesis_options(pendulum_config), theorem="disturbance-free")
    return synthesize(pendulum_system, pendulum_partition, None, opts)
