"""Two interconnected inverted pendulums coupled by a spring.

Each pendulum is linearised at the upright position and at r_i = 88 degrees,
giving two plant rules per subsystem. The local matrices are the benchmark's
tabulated values; they are not re-derived from the physical parameters.

The membership functions are normalised triangular IT2 sets anchored at the
two linearisation points, with the lower function a scaled copy (height 0.8)
of the upper one.
"""

from dataclasses import dataclass, field
from typing import Any, Optional

import numpy as np

from ..errors import ModelInputError
from ..fuzzy.membership import IT2Set, MembershipFn
from ..fuzzy.model import ControllerRuleBase, LargeScaleSystem, PlantRule, Subsystem
from ..partition.fou import StateBox
from ..simulation.closed_loop import DisturbanceSignal, DisturbanceSpec

# Lower membership height; the FOU width is one minus this
LOWER_HEIGHT = 0.8

# Reference gains (subsystem, controller rule) and attenuation level, for comparison only
REFERENCE_GAINS = {
    (0, 0): np.array([[-34.3381, -16.2743]]),
    (0, 1): np.array([[-60.0235, -31.7905]]),
    (1, 0): np.array([[-174.0191, -93.5045]]),
    (1, 1): np.array([[-485.0611, -268.4191]]),
}
REFERENCE_GAMMA = 0.333

INITIAL_STATES = ([1.2, 0.0], [0.8, 0.0])


@dataclass(frozen=True)
class PendulumParams:
    """Physical parameters and linearisation angle."""

    m1: float = 2.0
    m2: float = 2.5
    J1: float = 2.0
    J2: float = 2.5
    k: float = 8.0
    r: float = 1.0
    g: float = 9.8
    angle_deg: float = 88.0

    # Local slopes a_21 of the two rules per pendulum
    slopes: tuple[tuple[float, float], ...] = field(default=((8.81, 5.38), (9.01, 5.58)))
    coupling: tuple[float, float] = (0.25, 0.20)
    input_gain: float = 0.5
    disturbance_gain: float = 0.5

    def __post_init__(self) -> None:
        for name in ("m1", "m2", "J1", "J2", "k", "r", "g", "angle_deg"):
            if not getattr(self, name) > 0:
                raise ModelInputError(f"pendulum parameter {name} must be positive")
        if len(self.slopes) != 2 or any(len(s) != 2 for s in self.slopes):
            raise ModelInputError("pendulum slopes need two rules for each of two pendulums")

    @property
    def angle_rad(self) -> float:
        return float(np.deg2rad(self.angle_deg))


def default_membership(params: Optional[PendulumParams] = None) -> tuple[IT2Set, IT2Set]:
    """
    IT2 sets of rule 1 (near upright) and rule 2 (near +-r_i) over x_i1.

    Rule 1 peaks at the origin and vanishes at +-r_i; rule 2 is its
    complement on [-r_i, r_i] and holds full grade beyond.
    """
    params = params or PendulumParams()
    r = params.angle_rad
    near_zero = IT2Set(
        lower=MembershipFn.triangular(-r, 0.0, r, height=LOWER_HEIGHT),
        upper=MembershipFn.triangular(-r, 0.0, r),
        label="upright",
    )
    near_edge = IT2Set(
        lower=MembershipFn.tabulated([-r, 0.0, r], [LOWER_HEIGHT, 0.0, LOWER_HEIGHT]),
        upper=MembershipFn.tabulated([-r, 0.0, r], [1.0, 0.0, 1.0]),
        label="tilted",
    )
    return near_zero, near_edge


def build_system(params: Optional[PendulumParams] = None) -> LargeScaleSystem:
    """Two subsystems, two rules each; controller premises match the plant's."""
    params = params or PendulumParams()
    sets = default_membership(params)
    B = np.array([[0.0], [params.input_gain]])
    D1 = np.array([[0.0], [params.disturbance_gain]])
    C = np.array([[1.0, 1.0]])

    subsystems = []
    controllers = []
    for i in range(2):
        other = 1 - i
        rules = [
            PlantRule(
                A=[[0.0, 1.0], [params.slopes[i][l], 0.0]],
                B=B,
                D1=D1,
                C=C,
                D2=np.zeros((1, 1)),
                # column shorthand: coupling through the neighbour's angle
                interconnections={other: np.array([[0.0], [params.coupling[i]]])},
                antecedents=((0, sets[l]),),
            )
            for l in range(2)
        ]
        subsystems.append(Subsystem(index=i, rules=rules, label=f"pendulum {i + 1}"))
        controllers.append(ControllerRuleBase(rules=[((0, s),) for s in sets]))
    return LargeScaleSystem(subsystems=subsystems, controllers=controllers)


def default_partition_box(
    params: Optional[PendulumParams] = None, q_per_dim: Any = 4
) -> list[StateBox]:
    """Angle in [-r_i, r_i], rate in [-4, 4] rad/s, ``q_per_dim`` cells per dimension."""
    params = params or PendulumParams()
    r = params.angle_rad
    box = StateBox((-r, -4.0), (r, 4.0), tuple(np.broadcast_to(q_per_dim, (2,)).tolist()))
    return [box, box]


def scenario_disturbances() -> DisturbanceSpec:
    """0.8 and 0.6 times exp(-0.2 t) sin(0.2 t)."""
    return DisturbanceSpec(
        (
            DisturbanceSignal.decaying_sinusoid(0.8, 0.2, 0.2),
            DisturbanceSignal.decaying_sinusoid(0.6, 0.2, 0.2),
        )
    )


def reference_comparison(gains: list[list[np.ndarray]], gamma: Optional[float]) -> dict[str, Any]:
    """Synthesized gains and gamma next to the reference values."""
    rows = []
    for (i, j), ref in sorted(REFERENCE_GAINS.items()):
        ours = gains[i][j] if i < len(gains) and j < len(gains[i]) else None
        rows.append(
            {
                "subsystem": i,
                "rule": j,
                "reference": ref.tolist(),
                "synthesized": None if ours is None else np.asarray(ours).tolist(),
                "norm_ratio": (
                    None
                    if ours is None
                    else float(np.linalg.norm(ours) / np.linalg.norm(ref))
                ),
            }
        )
    return {
        "note": "reference values only; the reference membership shapes are not reproduced exactly",
        "gamma": {"reference": REFERENCE_GAMMA, "synthesized": gamma},
        "gains": rows,
    }
