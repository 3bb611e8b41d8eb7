"""Double-inverted-pendulum benchmark."""

from .pendulum import (
    INITIAL_STATES,
    REFERENCE_GAINS,
    REFERENCE_GAMMA,
    PendulumParams,
    build_system,
    default_membership,
    default_partition_box,
    reference_comparison,
    scenario_disturbances,
)

__all__ = [
    "INITIAL_STATES",
    "REFERENCE_GAINS",
    "REFERENCE_GAMMA",
    "PendulumParams",
    "build_system",
    "default_membership",
    "default_partition_box",
    "reference_comparison",
    "scenario_disturbances",
]
