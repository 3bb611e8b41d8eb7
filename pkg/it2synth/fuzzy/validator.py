"""Model validation ahead of partitioning and synthesis."""

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from ..utils.logger import get_logger
from .model import LargeScaleSystem, firing_matrix

# Points per dimension for the coverage scan
_COVERAGE_POINTS = 41


@dataclass
class ValidationResult:
    """Result of model validation."""

    is_valid: bool
    errors: list[str]
    warnings: list[str]
    notes: list[str] = field(default_factory=list)

    def has_errors(self) -> bool:
        """Check if there are any errors."""
        return len(self.errors) > 0

    def has_warnings(self) -> bool:
        """Check if there are any warnings."""
        return len(self.warnings) > 0


def controllability_rank(A: np.ndarray, B: np.ndarray) -> int:
    """Rank of the controllability matrix [B, AB, ..., A^(n-1) B]."""
    n = A.shape[0]
    blocks = [B]
    for _ in range(n - 1):
        blocks.append(A @ blocks[-1])
    return int(np.linalg.matrix_rank(np.hstack(blocks)))


class ModelValidator:
    """Validate a large-scale IT2 system before synthesis."""

    def __init__(self, verbose: bool = True) -> None:
        """
        Initialize validator.

        Args:
            verbose: Enable verbose logging
        """
        self.logger = get_logger(verbose=verbose)

    def validate(
        self,
        system: LargeScaleSystem,
        boxes: Optional[Sequence[tuple[np.ndarray, np.ndarray]]] = None,
    ) -> ValidationResult:
        """
        Validate a system.

        Args:
            system: System to validate
            boxes: Optional (lower, upper) state bounds per subsystem; enables
                the firing-coverage scan

        Returns:
            ValidationResult with errors, warnings and informational notes
        """
        self.logger.info("Validating model...")
        self.logger.indent()

        errors: list[str] = []
        warnings: list[str] = []
        notes: list[str] = []

        for sub in system.subsystems:
            rb = system.controllers[sub.index]
            if rb.c != sub.p or rb.rules != sub.rule_antecedents:
                notes.append(
                    f"subsystem {sub.index}: imperfect premise matching "
                    f"(plant p={sub.p}, controller c={rb.c})"
                )

            for l, rule in enumerate(sub.rules):
                rank = controllability_rank(rule.A, rule.B)
                if rank < sub.n:
                    warnings.append(
                        f"subsystem {sub.index}, rule {l}: (A, B) uncontrollable "
                        f"(rank {rank} < {sub.n})"
                    )
                unstable = np.sum(np.linalg.eigvals(rule.A).real > 0)
                if unstable:
                    notes.append(f"subsystem {sub.index}, rule {l}: {unstable} unstable open-loop mode(s)")
                for k, mat in rule.interconnections.items():
                    if mat.shape != (sub.n, system.subsystems[k].n):
                        errors.append(
                            f"subsystem {sub.index}, rule {l}: interconnection from {k} has "
                            f"shape {mat.shape}"
                        )
            self.logger.debug(f"subsystem {sub.index}: p={sub.p}, c={rb.c}, n={sub.n}")

        if boxes is not None:
            errors.extend(self._check_coverage(system, boxes))

        for error in errors:
            self.logger.error(error)
        for warning in warnings:
            self.logger.warning(warning)
        for note in notes:
            self.logger.debug(note)
        if not errors and not warnings:
            self.logger.success("All validation checks passed")

        self.logger.dedent()
        return ValidationResult(is_valid=not errors, errors=errors, warnings=warnings, notes=notes)

    def _check_coverage(
        self,
        system: LargeScaleSystem,
        boxes: Sequence[tuple[np.ndarray, np.ndarray]],
    ) -> list[str]:
        """Every grid point of every box must fire at least one plant and one controller rule."""
        errors = []
        for sub, (lower, upper) in zip(system.subsystems, boxes):
            axes = [np.linspace(lo, hi, _COVERAGE_POINTS) for lo, hi in zip(lower, upper)]
            points = np.stack([g.ravel() for g in np.meshgrid(*axes, indexing="ij")], axis=1)
            for what, rules in (
                ("plant", sub.rule_antecedents),
                ("controller", system.controllers[sub.index].rules),
            ):
                _, upper_firing = firing_matrix(rules, points)
                dead = upper_firing.sum(axis=1) <= 0.0
                if np.any(dead):
                    x = points[int(np.argmax(dead))]
                    errors.append(
                        f"subsystem {sub.index}: no {what} rule fires at x = "
                        f"{np.array2string(x, precision=4)}"
                    )
        return errors
