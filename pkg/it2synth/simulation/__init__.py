"""Closed-loop simulation, disturbances and trajectory metrics."""

from .closed_loop import (
    DISTURBANCE_KINDS,
    DisturbanceSignal,
    DisturbanceSpec,
    Trajectory,
    attenuation_ratio,
    closed_loop_derivative,
    integrate,
    load_trajectory,
    lyapunov_trace,
    save_trajectory,
    trajectory_metrics,
    zero_gains,
)

__all__ = [
    "DISTURBANCE_KINDS",
    "DisturbanceSignal",
    "DisturbanceSpec",
    "Trajectory",
    "attenuation_ratio",
    "closed_loop_derivative",
    "integrate",
    "load_trajectory",
    "lyapunov_trace",
    "save_trajectory",
    "trajectory_metrics",
    "zero_gains",
]
