"""Interval type-2 membership functions, rule bases and grade evaluation."""

from .membership import IT2Set, MembershipFn
from .model import (
    ControllerRuleBase,
    LargeScaleSystem,
    PlantRule,
    Subsystem,
    combined_grade_bounds,
    combined_grades,
    controller_grades,
    firing_bounds,
    grade_bounds,
    plant_grades,
)

__all__ = [
    "IT2Set",
    "MembershipFn",
    "ControllerRuleBase",
    "LargeScaleSystem",
    "PlantRule",
    "Subsystem",
    "combined_grade_bounds",
    "combined_grades",
    "controller_grades",
    "firing_bounds",
    "grade_bounds",
    "plant_grades",
]
