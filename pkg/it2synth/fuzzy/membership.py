"""Type-1 membership functions and interval type-2 sets.

All evaluations are vectorised: scalars map to floats, arrays map to arrays
of the same shape. Grades are always clipped to [0, 1].
"""

from dataclasses import dataclass, field
from typing import Any, Union

import numpy as np

from ..errors import ModelInputError

ArrayLike = Union[float, np.ndarray]

SHAPES = ("triangular", "trapezoidal", "gaussian", "tabulated")

# Points per IT2 ordering check
_ORDER_GRID = 2001


def _ramp_up(x: np.ndarray, a: float, b: float) -> np.ndarray:
    if b > a:
        return np.clip((x - a) / (b - a), 0.0, 1.0)
    return (x >= a).astype(float)


def _ramp_down(x: np.ndarray, c: float, d: float) -> np.ndarray:
    if d > c:
        return np.clip((d - x) / (d - c), 0.0, 1.0)
    return (x <= d).astype(float)


@dataclass(frozen=True)
class MembershipFn:
    """
    A single (type-1) membership function.

    ``params`` holds the shape parameters in state units:

    - triangular: (a, b, c) with a <= b <= c, a < c
    - trapezoidal: (a, b, c, d) with a <= b <= c <= d, a < d
    - gaussian: (center, width) with width > 0
    - tabulated: strictly increasing breakpoints; ``grades`` holds the grade
      at each breakpoint. Linear in between, end grades held outside.

    ``height`` scales the non-tabulated shapes; scaled copies of an upper
    function are the usual way to draw a footprint of uncertainty.
    """

    shape: str
    params: tuple[float, ...]
    grades: tuple[float, ...] = ()
    height: float = 1.0

    def __post_init__(self) -> None:
        """Validate parameters for the chosen shape."""
        object.__setattr__(self, "params", tuple(float(p) for p in self.params))
        object.__setattr__(self, "grades", tuple(float(g) for g in self.grades))
        p = self.params

        if self.shape not in SHAPES:
            raise ModelInputError(f"Unknown membership shape {self.shape!r}; expected one of {SHAPES}")
        if not 0.0 < self.height <= 1.0:
            raise ModelInputError(f"Membership height must lie in (0, 1], got {self.height}")

        if self.shape == "triangular":
            if len(p) != 3 or not (p[0] <= p[1] <= p[2] and p[0] < p[2]):
                raise ModelInputError(f"Triangular parameters must satisfy a <= b <= c, a < c; got {p}")
        elif self.shape == "trapezoidal":
            if len(p) != 4 or not (p[0] <= p[1] <= p[2] <= p[3] and p[0] < p[3]):
                raise ModelInputError(
                    f"Trapezoidal parameters must satisfy a <= b <= c <= d, a < d; got {p}"
                )
        elif self.shape == "gaussian":
            if len(p) != 2 or p[1] <= 0:
                raise ModelInputError(f"Gaussian parameters must be (center, width > 0); got {p}")
        else:
            bp = np.asarray(p)
            gr = np.asarray(self.grades)
            if bp.size < 2 or bp.size != gr.size:
                raise ModelInputError(
                    f"Tabulated function needs >= 2 breakpoints with one grade each; "
                    f"got {bp.size} breakpoints and {gr.size} grades"
                )
            if np.any(np.diff(bp) <= 0):
                raise ModelInputError("Tabulated breakpoints must be strictly increasing")
            if np.any(gr < 0) or np.any(gr > 1):
                raise ModelInputError("Tabulated grades must lie in [0, 1]")

    @classmethod
    def triangular(cls, a: float, b: float, c: float, height: float = 1.0) -> "MembershipFn":
        return cls("triangular", (a, b, c), height=height)

    @classmethod
    def trapezoidal(cls, a: float, b: float, c: float, d: float, height: float = 1.0) -> "MembershipFn":
        return cls("trapezoidal", (a, b, c, d), height=height)

    @classmethod
    def gaussian(cls, center: float, width: float, height: float = 1.0) -> "MembershipFn":
        return cls("gaussian", (center, width), height=height)

    @classmethod
    def tabulated(cls, breakpoints: Any, grades: Any) -> "MembershipFn":
        return cls("tabulated", tuple(breakpoints), tuple(grades))

    def __call__(self, x: ArrayLike) -> ArrayLike:
        """Evaluate the grade at ``x``."""
        arr = np.asarray(x, dtype=float)
        p = self.params
        if self.shape == "triangular":
            g = self.height * np.minimum(_ramp_up(arr, p[0], p[1]), _ramp_down(arr, p[1], p[2]))
        elif self.shape == "trapezoidal":
            g = self.height * np.minimum(_ramp_up(arr, p[0], p[1]), _ramp_down(arr, p[2], p[3]))
        elif self.shape == "gaussian":
            g = self.height * np.exp(-0.5 * ((arr - p[0]) / p[1]) ** 2)
        else:
            g = np.interp(arr, p, self.grades)
        g = np.clip(g, 0.0, 1.0)
        return float(g) if g.ndim == 0 else g

    def support_hint(self) -> tuple[float, float]:
        """Interval outside which the function is constant (or negligible)."""
        p = self.params
        if self.shape == "gaussian":
            return p[0] - 6.0 * p[1], p[0] + 6.0 * p[1]
        return p[0], p[-1]

    def to_dict(self) -> dict[str, Any]:
        data: dict[str, Any] = {"shape": self.shape, "params": list(self.params)}
        if self.shape == "tabulated":
            data["grades"] = list(self.grades)
        elif self.height != 1.0:
            data["height"] = self.height
        return data

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "MembershipFn":
        unknown = set(data) - {"shape", "params", "grades", "height"}
        if unknown:
            raise ModelInputError(f"Unknown membership keys: {sorted(unknown)}")
        return cls(
            shape=data["shape"],
            params=tuple(data["params"]),
            grades=tuple(data.get("grades", ())),
            height=float(data.get("height", 1.0)),
        )


@dataclass(frozen=True)
class IT2Set:
    """Interval type-2 fuzzy set bounded by a lower and an upper function."""

    lower: MembershipFn
    upper: MembershipFn
    label: str = field(default="", compare=False)

    def __post_init__(self) -> None:
        """Check lower <= upper on a dense grid covering both supports."""
        lo_a, hi_a = self.lower.support_hint()
        lo_b, hi_b = self.upper.support_hint()
        lo, hi = min(lo_a, lo_b), max(hi_a, hi_b)
        pad = 0.1 * (hi - lo) if hi > lo else 1.0
        grid = np.linspace(lo - pad, hi + pad, _ORDER_GRID)
        gap = np.asarray(self.lower(grid)) - np.asarray(self.upper(grid))
        worst = int(np.argmax(gap))
        if gap[worst] > 1e-12:
            raise ModelInputError(
                f"IT2 set {self.label or '<unnamed>'}: lower grade exceeds upper grade "
                f"at x = {grid[worst]:.6g} (by {gap[worst]:.3g})"
            )

    def bounds(self, x: ArrayLike) -> tuple[ArrayLike, ArrayLike]:
        """Return (lower grade, upper grade) at ``x``."""
        return self.lower(x), self.upper(x)

    def to_dict(self) -> dict[str, Any]:
        data: dict[str, Any] = {"lower": self.lower.to_dict(), "upper": self.upper.to_dict()}
        if self.label:
            data["label"] = self.label
        return data

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "IT2Set":
        return cls(
            lower=MembershipFn.from_dict(data["lower"]),
            upper=MembershipFn.from_dict(data["upper"]),
            label=str(data.get("label", "")),
        )
