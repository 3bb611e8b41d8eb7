"""IT2 Takagi-Sugeno large-scale system model and grade evaluation.

Grades follow the usual interval type-2 pipeline: per-rule firing bounds are
the product of antecedent grades, a type-reduction weight pair (alpha for the
plant, beta for the controller) blends them into one embedded grade, and the
embedded grades are normalised to sum to one.

Besides the realised grades, :func:`grade_bounds` returns the envelope of the
normalised grade over every admissible weight pair. That envelope is the
footprint of uncertainty the partition module slices.
"""

from dataclasses import dataclass, field
from typing import Any, Callable, Optional, Sequence, Union

import numpy as np

from ..errors import DegenerateGradeError, ModelInputError
from .membership import IT2Set

Antecedent = tuple[int, IT2Set]
Realization = Callable[[np.ndarray], Any]

# Tolerance on type-reduction weight pairs
_WEIGHT_TOL = 1e-9


def _matrix(value: Any, name: str, orient: str = "matrix") -> np.ndarray:
    """Convert to a float 2-D array; 1-D input becomes a column or a row."""
    arr = np.asarray(value, dtype=float)
    if arr.ndim == 0:
        arr = arr.reshape(1, 1)
    elif arr.ndim == 1:
        arr = arr.reshape(-1, 1) if orient == "column" else arr.reshape(1, -1)
    if arr.ndim != 2:
        raise ModelInputError(f"{name} must be a 2-D matrix, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ModelInputError(f"{name} contains non-finite entries")
    return arr


@dataclass(frozen=True)
class ConstantRealization:
    """Type-reduction weights that do not depend on the state."""

    values: tuple[tuple[float, float], ...]

    def __call__(self, x: np.ndarray) -> np.ndarray:
        return np.asarray(self.values, dtype=float)

    @classmethod
    def uniform(cls, n_rules: int, lower_weight: float = 0.5) -> "ConstantRealization":
        return cls(tuple((lower_weight, 1.0 - lower_weight) for _ in range(n_rules)))


def _check_weights(values: Any, n_rules: int, what: str) -> np.ndarray:
    w = np.asarray(values, dtype=float)
    if w.shape != (n_rules, 2):
        raise ModelInputError(f"{what} realization must return shape ({n_rules}, 2), got {w.shape}")
    if np.any(w < -_WEIGHT_TOL) or np.any(w > 1 + _WEIGHT_TOL):
        raise ModelInputError(f"{what} weights must lie in [0, 1]")
    if np.any(np.abs(w.sum(axis=1) - 1.0) > _WEIGHT_TOL):
        raise ModelInputError(f"{what} weight pairs must sum to 1")
    return np.clip(w, 0.0, 1.0)


def _check_antecedents(antecedents: Sequence[Antecedent], n: int, where: str) -> tuple[Antecedent, ...]:
    out = []
    for idx, it2 in antecedents:
        if not 0 <= int(idx) < n:
            raise ModelInputError(f"{where}: antecedent state index {idx} outside [0, {n})")
        if not isinstance(it2, IT2Set):
            raise ModelInputError(f"{where}: antecedent set must be an IT2Set")
        out.append((int(idx), it2))
    return tuple(out)


@dataclass
class PlantRule:
    """One local linear model of a subsystem's rule base."""

    A: np.ndarray
    B: np.ndarray
    D1: Optional[np.ndarray] = None
    C: Optional[np.ndarray] = None
    D2: Optional[np.ndarray] = None
    interconnections: dict[int, np.ndarray] = field(default_factory=dict)
    antecedents: tuple[Antecedent, ...] = ()

    def __post_init__(self) -> None:
        """Convert arrays and check dimensions against A."""
        self.A = _matrix(self.A, "A")
        n = self.A.shape[0]
        if self.A.shape != (n, n):
            raise ModelInputError(f"A must be square, got shape {self.A.shape}")

        self.B = _matrix(self.B, "B", orient="column")
        self.D1 = _matrix(self.D1 if self.D1 is not None else np.zeros((n, 1)), "D1", orient="column")
        self.C = _matrix(self.C if self.C is not None else np.zeros((1, n)), "C", orient="row")
        n_z, m_w = self.C.shape[0], self.D1.shape[1]
        self.D2 = _matrix(self.D2 if self.D2 is not None else np.zeros((n_z, m_w)), "D2")

        if self.B.shape[0] != n:
            raise ModelInputError(f"B must have {n} rows, got shape {self.B.shape}")
        if self.D1.shape[0] != n:
            raise ModelInputError(f"D1 must have {n} rows, got shape {self.D1.shape}")
        if self.C.shape[1] != n:
            raise ModelInputError(f"C must have {n} columns, got shape {self.C.shape}")
        if self.D2.shape != (n_z, m_w):
            raise ModelInputError(f"D2 must have shape {(n_z, m_w)}, got {self.D2.shape}")

        self.interconnections = {
            int(k): _matrix(v, f"interconnection from subsystem {k}", orient="column")
            for k, v in self.interconnections.items()
        }
        for k, mat in self.interconnections.items():
            if mat.shape[0] != n:
                raise ModelInputError(
                    f"interconnection from subsystem {k} must have {n} rows, got shape {mat.shape}"
                )
        self.antecedents = _check_antecedents(self.antecedents, n, "plant rule")

    @property
    def n(self) -> int:
        return self.A.shape[0]

    @property
    def m(self) -> int:
        return self.B.shape[1]

    @property
    def m_w(self) -> int:
        return self.D1.shape[1]

    @property
    def n_z(self) -> int:
        return self.C.shape[0]


@dataclass
class Subsystem:
    """One interconnected subsystem: its rules and alpha realization."""

    index: int
    rules: list[PlantRule]
    alpha_realization: Optional[Realization] = None
    label: str = ""

    def __post_init__(self) -> None:
        """Check rule count and dimension consistency."""
        if len(self.rules) < 1:
            raise ModelInputError(f"subsystem {self.index}: needs at least one rule")
        first = self.rules[0]
        dims = (first.n, first.m, first.m_w, first.n_z)
        for l, rule in enumerate(self.rules):
            if (rule.n, rule.m, rule.m_w, rule.n_z) != dims:
                raise ModelInputError(
                    f"subsystem {self.index}, rule {l}: dimensions (n, m, m_w, n_z) = "
                    f"{(rule.n, rule.m, rule.m_w, rule.n_z)} differ from rule 0's {dims}"
                )
            if self.index in rule.interconnections:
                raise ModelInputError(
                    f"subsystem {self.index}, rule {l}: interconnection key must differ from own index"
                )

    @property
    def n(self) -> int:
        return self.rules[0].n

    @property
    def m(self) -> int:
        return self.rules[0].m

    @property
    def m_w(self) -> int:
        return self.rules[0].m_w

    @property
    def n_z(self) -> int:
        return self.rules[0].n_z

    @property
    def p(self) -> int:
        return len(self.rules)

    @property
    def rule_antecedents(self) -> list[tuple[Antecedent, ...]]:
        return [rule.antecedents for rule in self.rules]

    def alpha(self, x: np.ndarray) -> np.ndarray:
        """Type-reduction weights (lower, upper) per rule at ``x``."""
        if self.alpha_realization is None:
            return np.full((self.p, 2), 0.5)
        return _check_weights(self.alpha_realization(x), self.p, f"subsystem {self.index} alpha")


@dataclass
class ControllerRuleBase:
    """Controller premises; independent of the plant's rules and sets."""

    rules: list[tuple[Antecedent, ...]]
    beta_realization: Optional[Realization] = None

    def __post_init__(self) -> None:
        if len(self.rules) < 1:
            raise ModelInputError("controller rule base needs at least one rule")
        self.rules = [tuple(r) for r in self.rules]

    @property
    def c(self) -> int:
        return len(self.rules)

    @property
    def rule_antecedents(self) -> list[tuple[Antecedent, ...]]:
        return list(self.rules)

    @property
    def state_dimension_needed(self) -> int:
        """Smallest state dimension the premises can be evaluated on."""
        return max((idx + 1 for rule in self.rules for idx, _ in rule), default=0)

    def beta(self, x: np.ndarray) -> np.ndarray:
        """Type-reduction weights (lower, upper) per rule at ``x``."""
        if self.beta_realization is None:
            return np.full((self.c, 2), 0.5)
        return _check_weights(self.beta_realization(x), self.c, "controller beta")


@dataclass
class LargeScaleSystem:
    """N interconnected IT2 T-S subsystems with one controller rule base each."""

    subsystems: list[Subsystem]
    controllers: list[ControllerRuleBase]

    def __post_init__(self) -> None:
        """Check indices and interconnection references; expand column shorthand."""
        if len(self.subsystems) < 1:
            raise ModelInputError("system needs at least one subsystem")
        if len(self.controllers) != len(self.subsystems):
            raise ModelInputError(
                f"expected one controller rule base per subsystem: "
                f"{len(self.subsystems)} subsystems, {len(self.controllers)} controllers"
            )
        for pos, sub in enumerate(self.subsystems):
            if sub.index != pos:
                raise ModelInputError(f"subsystem at position {pos} has index {sub.index}")
            _check_antecedents(
                [a for rule in self.controllers[pos].rules for a in rule],
                sub.n,
                f"controller {pos}",
            )

        for sub in self.subsystems:
            for l, rule in enumerate(sub.rules):
                for k, mat in list(rule.interconnections.items()):
                    if not 0 <= k < self.N:
                        raise ModelInputError(
                            f"subsystem {sub.index}, rule {l}: interconnection references "
                            f"missing subsystem {k}"
                        )
                    n_k = self.subsystems[k].n
                    if mat.shape[1] == n_k:
                        continue
                    if mat.shape[1] == 1:
                        # column shorthand: coupling through the neighbour's first state
                        full = np.zeros((sub.n, n_k))
                        full[:, 0] = mat[:, 0]
                        rule.interconnections[k] = full
                    else:
                        raise ModelInputError(
                            f"subsystem {sub.index}, rule {l}: interconnection from {k} has "
                            f"shape {mat.shape}, expected ({sub.n}, {n_k})"
                        )

    @property
    def N(self) -> int:
        return len(self.subsystems)

    def state_dims(self) -> list[int]:
        return [s.n for s in self.subsystems]


RuleSource = Union[Subsystem, ControllerRuleBase, Sequence[Sequence[Antecedent]]]


def _antecedent_rules(source: RuleSource) -> list[tuple[Antecedent, ...]]:
    if isinstance(source, (Subsystem, ControllerRuleBase)):
        return source.rule_antecedents
    return [tuple(r) for r in source]


def _as_points(x: Any, n: int, what: str) -> np.ndarray:
    """Return an (npts, n) array, validating the state dimension."""
    pts = np.asarray(x, dtype=float)
    if pts.ndim == 1:
        pts = pts.reshape(1, -1)
    if pts.ndim != 2 or pts.shape[1] != n:
        raise ModelInputError(f"{what}: expected state dimension {n}, got shape {np.shape(x)}")
    return pts


def firing_matrix(rules: Sequence[tuple[Antecedent, ...]], points: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """
    Lower and upper firing strengths of every rule at every point.

    Args:
        rules: Antecedent tuples, one per rule
        points: (npts, n) array of states

    Returns:
        Tuple of (lower, upper) arrays of shape (npts, n_rules)
    """
    npts = points.shape[0]
    lower = np.ones((npts, len(rules)))
    upper = np.ones((npts, len(rules)))
    for r, antecedents in enumerate(rules):
        for idx, it2 in antecedents:
            lo, hi = it2.bounds(points[:, idx])
            lower[:, r] *= lo
            upper[:, r] *= hi
    return lower, upper


def firing_bounds(sub: Subsystem, l: int, x: Any) -> tuple[float, float]:
    """
    Lower and upper firing strength of plant rule ``l`` at ``x``.

    Raises:
        ModelInputError: On a bad rule index or state dimension
    """
    if not 0 <= l < sub.p:
        raise ModelInputError(f"subsystem {sub.index}: rule index {l} outside [0, {sub.p})")
    pts = _as_points(x, sub.n, f"subsystem {sub.index}")
    lower, upper = firing_matrix([sub.rules[l].antecedents], pts)
    return float(lower[0, 0]), float(upper[0, 0])


def _type_reduce(lower: np.ndarray, upper: np.ndarray, weights: np.ndarray, what: str, x: np.ndarray) -> np.ndarray:
    embedded = weights[:, 0] * lower + weights[:, 1] * upper
    total = embedded.sum()
    if total <= 0.0:
        raise DegenerateGradeError(
            f"{what}: all firing strengths vanish at x = {np.array2string(x, precision=6)}",
            details={"state": x.tolist()},
        )
    return embedded / total


def plant_grades(sub: Subsystem, x: Any) -> np.ndarray:
    """
    Normalised type-reduced plant grades at ``x``.

    Raises:
        DegenerateGradeError: If every rule's embedded grade is zero
    """
    pts = _as_points(x, sub.n, f"subsystem {sub.index}")
    lower, upper = firing_matrix(sub.rule_antecedents, pts)
    return _type_reduce(lower[0], upper[0], sub.alpha(pts[0]), f"subsystem {sub.index}", pts[0])


def controller_grades(rb: ControllerRuleBase, x: Any, n: Optional[int] = None) -> np.ndarray:
    """
    Normalised type-reduced controller grades at ``x``.

    Args:
        rb: Controller rule base
        x: Single state
        n: Expected state dimension; defaults to the length of ``x``

    Raises:
        ModelInputError: On a batch of points, a dimension mismatch or a
            premise reading a state component beyond ``n``
        DegenerateGradeError: If every rule's embedded grade is zero
    """
    if n is None:
        n = int(np.size(x)) if np.ndim(x) == 1 else -1
    pts = _as_points(x, n, "controller")
    if pts.shape[0] != 1:
        raise ModelInputError(f"controller: expected a single state, got shape {np.shape(x)}")
    if rb.state_dimension_needed > n:
        raise ModelInputError(
            f"controller: premises read state component {rb.state_dimension_needed - 1}, "
            f"state has dimension {n}"
        )
    lower, upper = firing_matrix(rb.rules, pts)
    return _type_reduce(lower[0], upper[0], rb.beta(pts[0]), "controller", pts[0])


def combined_grades(system: LargeScaleSystem, i: int, x: Any) -> np.ndarray:
    """Table of combined grades h[l, j] = plant grade l times controller grade j."""
    sub = system.subsystems[i]
    w = plant_grades(sub, x)
    m = controller_grades(system.controllers[i], x, sub.n)
    return np.outer(w, m)


def envelope_from_firing(lower: np.ndarray, upper: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """
    Envelope of the normalised grade over all type-reduction weights.

    Rule r's grade is increasing in its own embedded grade and decreasing in
    the others', so the extremes pair its lower bound with the others' upper
    bounds and vice versa.

    Args:
        lower, upper: (npts, n_rules) firing bounds

    Returns:
        Tuple of (lower, upper) normalised-grade bounds, same shape

    Raises:
        DegenerateGradeError: At points where every upper firing strength is zero
    """
    sum_lo = lower.sum(axis=1, keepdims=True)
    sum_hi = upper.sum(axis=1, keepdims=True)
    dead = sum_hi[:, 0] <= 0.0
    if np.any(dead):
        raise DegenerateGradeError(
            f"all firing strengths vanish at {int(dead.sum())} point(s)",
            details={"first_point_index": int(np.argmax(dead))},
        )
    den_lo = lower + (sum_hi - upper)
    den_hi = upper + (sum_lo - lower)
    with np.errstate(divide="ignore", invalid="ignore"):
        env_lo = np.where(den_lo > 0.0, lower / den_lo, np.where(upper > 0.0, 1.0, 0.0))
        env_hi = np.where(den_hi > 0.0, upper / den_hi, 0.0)
    return np.clip(env_lo, 0.0, 1.0), np.clip(env_hi, 0.0, 1.0)


def grade_bounds(source: RuleSource, x: Any) -> tuple[np.ndarray, np.ndarray]:
    """Envelope (lower, upper) of each rule's normalised grade at ``x``."""
    pts = np.asarray(x, dtype=float).reshape(1, -1)
    lo, hi = envelope_from_firing(*firing_matrix(_antecedent_rules(source), pts))
    return lo[0], hi[0]


def combined_grade_bounds_batch(
    system: LargeScaleSystem, i: int, points: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    """
    Envelope of the combined grades at many points.

    Returns:
        Tuple of (lower, upper) arrays of shape (npts, p, c)
    """
    sub = system.subsystems[i]
    pts = _as_points(points, sub.n, f"subsystem {i}")
    try:
        w_lo, w_hi = envelope_from_firing(*firing_matrix(sub.rule_antecedents, pts))
        m_lo, m_hi = envelope_from_firing(*firing_matrix(system.controllers[i].rules, pts))
    except DegenerateGradeError as e:
        idx = e.details.get("first_point_index", 0)
        raise DegenerateGradeError(
            f"subsystem {i}: {e.message} (e.g. x = {np.array2string(pts[idx], precision=6)})",
            details={"subsystem": i, "state": pts[idx].tolist()},
        )
    return w_lo[:, :, None] * m_lo[:, None, :], w_hi[:, :, None] * m_hi[:, None, :]


def combined_grade_bounds(system: LargeScaleSystem, i: int, x: Any) -> tuple[np.ndarray, np.ndarray]:
    """Envelope (lower, upper) of the combined grade table h[l, j] at ``x``."""
    lo, hi = combined_grade_bounds_batch(system, i, np.asarray(x, dtype=float).reshape(1, -1))
    return lo[0], hi[0]
