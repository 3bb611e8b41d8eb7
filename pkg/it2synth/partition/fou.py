"""Partition of the state box and of the footprint of uncertainty.

Each subsystem's state box is cut into uniform axis-aligned cells. Over each
cell the band [lower(x), upper(x)] that contains every admissible combined
grade is sliced pointwise into tau + 1 equal sub-bands; slice z of rule pair
(l, j) at x is

    [lower + z * width / (tau + 1), lower + (z + 1) * width / (tau + 1)]

with width = upper - lower. The realised grade always sits in exactly one
slice. For every cell, slice and corner the tables hold constants delta_lower
<= delta_upper bounding that slice over the cell; multilinear interpolation
of the corner constants gives the bounding functions used by the relaxed
LMIs. Cells computed here carry the same constants at every corner.

Points on a shared cell face belong to the cell with the higher index along
that dimension, except on the upper face of the box.
"""

import itertools
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Optional, Sequence, Union

import numpy as np
from scipy.optimize import minimize

from ..errors import DegenerateGradeError, ModelInputError, PartitionError
from ..fuzzy.model import LargeScaleSystem, combined_grade_bounds_batch, combined_grades
from ..utils.logger import get_logger

# Envelope audit tolerance
AUDIT_TOL = 1e-8

# Relative slack when deciding whether a point lies inside the box
_BOX_TOL = 1e-12


@dataclass(frozen=True)
class StateBox:
    """Axis-aligned state box with a uniform grid of cells."""

    lower: tuple[float, ...]
    upper: tuple[float, ...]
    counts: tuple[int, ...] = ()

    def __post_init__(self) -> None:
        """Normalise to tuples and validate."""
        lower = tuple(float(v) for v in np.atleast_1d(self.lower))
        upper = tuple(float(v) for v in np.atleast_1d(self.upper))
        counts = tuple(int(c) for c in np.atleast_1d(self.counts)) if len(np.atleast_1d(self.counts)) else ()
        if len(counts) == 0:
            counts = (1,) * len(lower)
        elif len(counts) == 1 and len(lower) > 1:
            counts = counts * len(lower)
        object.__setattr__(self, "lower", lower)
        object.__setattr__(self, "upper", upper)
        object.__setattr__(self, "counts", counts)

        if len(lower) != len(upper) or len(lower) != len(counts) or not lower:
            raise PartitionError(
                f"state box needs matching lower/upper/counts, got {len(lower)}/{len(upper)}/{len(counts)}"
            )
        for r, (lo, hi) in enumerate(zip(lower, upper)):
            if not lo < hi:
                raise PartitionError(f"state box dimension {r}: lower {lo} must be < upper {hi}")
        if any(c < 1 for c in counts):
            raise PartitionError(f"state box grid counts must be >= 1, got {counts}")

    @property
    def n(self) -> int:
        return len(self.lower)

    @property
    def q(self) -> int:
        """Number of cells."""
        return int(np.prod(self.counts))

    @property
    def widths(self) -> np.ndarray:
        return (np.asarray(self.upper) - np.asarray(self.lower)) / np.asarray(self.counts)

    def with_counts(self, counts: Union[int, Sequence[int]]) -> "StateBox":
        return StateBox(self.lower, self.upper, tuple(np.broadcast_to(counts, (self.n,)).tolist()))

    def corners(self) -> list[tuple[int, ...]]:
        """Corner multi-indices (0 = lower side, 1 = upper side) per dimension."""
        return list(itertools.product((0, 1), repeat=self.n))

    def contains(self, x: np.ndarray) -> bool:
        x = np.asarray(x, dtype=float)
        span = np.asarray(self.upper) - np.asarray(self.lower)
        tol = _BOX_TOL * span
        return bool(np.all(x >= np.asarray(self.lower) - tol) and np.all(x <= np.asarray(self.upper) + tol))

    def locate(self, x: Any) -> np.ndarray:
        """
        Cell multi-indices of one or many points.

        Args:
            x: (n,) or (npts, n) states

        Returns:
            Integer array of shape (npts, n)

        Raises:
            PartitionError: If a point lies outside the box
        """
        pts = np.atleast_2d(np.asarray(x, dtype=float))
        if pts.shape[1] != self.n:
            raise ModelInputError(f"expected state dimension {self.n}, got shape {np.shape(x)}")
        lower, upper = np.asarray(self.lower), np.asarray(self.upper)
        tol = _BOX_TOL * (upper - lower)
        outside = np.any((pts < lower - tol) | (pts > upper + tol), axis=1)
        if np.any(outside):
            bad = pts[int(np.argmax(outside))]
            raise PartitionError(
                f"x = {np.array2string(bad, precision=6)} lies outside the state box "
                f"[{list(self.lower)}, {list(self.upper)}]; extrapolation is not allowed"
            )
        idx = np.floor((pts - lower) / self.widths).astype(int)
        return np.clip(idx, 0, np.asarray(self.counts) - 1)

    def flat(self, multi: Sequence[int]) -> int:
        return int(np.ravel_multi_index(tuple(multi), self.counts))

    def unflat(self, k: int) -> tuple[int, ...]:
        return tuple(int(v) for v in np.unravel_index(k, self.counts))

    def cell_bounds(self, k: int) -> tuple[np.ndarray, np.ndarray]:
        """(lower, upper) corner of flat cell ``k``."""
        multi = np.asarray(self.unflat(k))
        lo = np.asarray(self.lower) + multi * self.widths
        hi = lo + self.widths
        # pin the outer faces exactly to the box
        hi = np.where(multi == np.asarray(self.counts) - 1, np.asarray(self.upper), hi)
        return lo, hi

    def lattice(self, k: int, per_dim: int) -> np.ndarray:
        """Regular lattice of ``per_dim`` points per dimension over cell ``k``, corners included."""
        lo, hi = self.cell_bounds(k)
        axes = [np.linspace(a, b, per_dim) for a, b in zip(lo, hi)]
        return np.stack([g.ravel() for g in np.meshgrid(*axes, indexing="ij")], axis=1)

    def to_dict(self) -> dict[str, Any]:
        return {"lower": list(self.lower), "upper": list(self.upper), "counts": list(self.counts)}


@dataclass
class FouPartition:
    """
    Per-subsystem delta tables.

    ``delta_lower[i]`` and ``delta_upper[i]`` have shape
    (p, c, q, 2**n, tau + 1): rule pair, cell, corner, slice.
    ``grade_min[i]`` / ``grade_max[i]`` (p, c, q) hold the sampled extrema of
    the realised combined grade, kept for audit and reporting.
    """

    boxes: list[StateBox]
    tau: int
    delta_lower: list[np.ndarray]
    delta_upper: list[np.ndarray]
    grade_min: list[np.ndarray] = field(default_factory=list)
    grade_max: list[np.ndarray] = field(default_factory=list)
    samples_per_cell: int = 9
    margin: float = 1e-9

    def __post_init__(self) -> None:
        """Validate table shapes and ordering."""
        if self.tau < 0:
            raise PartitionError(f"tau must be >= 0, got {self.tau}")
        if not (len(self.boxes) == len(self.delta_lower) == len(self.delta_upper)):
            raise PartitionError("one box and one pair of delta tables per subsystem required")
        for i, (box, lo, hi) in enumerate(zip(self.boxes, self.delta_lower, self.delta_upper)):
            lo = np.asarray(lo, dtype=float)
            hi = np.asarray(hi, dtype=float)
            if lo.ndim != 5 or lo.shape != hi.shape:
                raise PartitionError(f"subsystem {i}: delta tables must share a 5-D shape")
            if lo.shape[2:] != (box.q, 2 ** box.n, self.tau + 1):
                raise PartitionError(
                    f"subsystem {i}: delta table shape {lo.shape} does not match "
                    f"q={box.q}, corners={2 ** box.n}, slices={self.tau + 1}"
                )
            if np.any(lo < 0) or np.any(hi > 1) or np.any(lo > hi):
                raise PartitionError(f"subsystem {i}: delta tables must satisfy 0 <= lower <= upper <= 1")
            self.delta_lower[i] = lo
            self.delta_upper[i] = hi

    @property
    def tau_plus_1(self) -> int:
        return self.tau + 1

    @property
    def N(self) -> int:
        return len(self.boxes)

    def q(self, i: int) -> int:
        return self.boxes[i].q

    def distinct_corners(self, i: int, cell: int) -> list[int]:
        """
        First corner index of each distinct bound set in ``cell``.

        Two corners are equal when their lower and upper tables agree for
        every rule pair and slice; the membership relaxation needs one
        constraint per distinct corner only.
        """
        lo = self.delta_lower[i][:, :, cell]
        hi = self.delta_upper[i][:, :, cell]
        seen: dict[bytes, int] = {}
        for k in range(lo.shape[2]):
            key = np.ascontiguousarray(lo[:, :, k]).tobytes() + np.ascontiguousarray(hi[:, :, k]).tobytes()
            seen.setdefault(key, k)
        return sorted(seen.values())

    def rule_counts(self, i: int) -> tuple[int, int]:
        """(p, c) of subsystem ``i``."""
        return self.delta_lower[i].shape[0], self.delta_lower[i].shape[1]

    def check_compatible(self, system: LargeScaleSystem) -> None:
        """
        Raise if the tables do not match the system's subsystems and rules.

        Raises:
            PartitionError: On any index mismatch
        """
        if self.N != system.N:
            raise PartitionError(f"partition covers {self.N} subsystems, system has {system.N}")
        for sub in system.subsystems:
            i = sub.index
            if self.boxes[i].n != sub.n:
                raise PartitionError(f"subsystem {i}: box dimension {self.boxes[i].n} != state dimension {sub.n}")
            if self.rule_counts(i) != (sub.p, system.controllers[i].c):
                raise PartitionError(
                    f"subsystem {i}: delta tables sized for (p, c) = {self.rule_counts(i)}, "
                    f"system has {(sub.p, system.controllers[i].c)}"
                )

    def summary(self) -> dict[str, Any]:
        """Relaxation parameters and envelope widths, for reports."""
        return {
            "tau": self.tau,
            "samples_per_cell": self.samples_per_cell,
            "margin": self.margin,
            "sampled_bounds": "lattice sampling with margin (not interval-verified)",
            "subsystems": [
                {
                    "box": box.to_dict(),
                    "q": box.q,
                    "max_width": float(np.max(hi - lo)),
                    "mean_width": float(np.mean(hi - lo)),
                }
                for box, lo, hi in zip(self.boxes, self.delta_lower, self.delta_upper)
            ],
        }


@dataclass
class InterpWeights:
    """Multilinear tent weights of one point in its containing cell."""

    cell: int
    pairs: np.ndarray
    corner_weights: np.ndarray

    def dense(self, q: int) -> np.ndarray:
        """(q, 2**n) table: zero outside the containing cell."""
        table = np.zeros((q, self.corner_weights.size))
        table[self.cell] = self.corner_weights
        return table


def _corner_weight_matrix(box: StateBox, points: np.ndarray, cells: np.ndarray) -> np.ndarray:
    """(npts, 2**n) product weights of each point over its cell's corners."""
    lower = np.asarray(box.lower) + cells * box.widths
    t = np.clip((points - lower) / box.widths, 0.0, 1.0)
    weights = np.ones((points.shape[0], 2 ** box.n))
    for c, corner in enumerate(box.corners()):
        for r, side in enumerate(corner):
            weights[:, c] *= t[:, r] if side else 1.0 - t[:, r]
    return weights


def interp_weights(partition: FouPartition, i: int, x: Any) -> InterpWeights:
    """
    Interpolation weights of ``x`` in subsystem ``i``'s partition.

    Per dimension r the pair (v_r1, v_r2) weighs the lower and upper face of
    the containing cell and sums to one; the corner weights are products of
    one entry per pair and also sum to one.

    Raises:
        PartitionError: If ``x`` lies outside the box
    """
    box = partition.boxes[i]
    pts = np.asarray(x, dtype=float).reshape(1, -1)
    cells = box.locate(pts)
    lower = np.asarray(box.lower) + cells[0] * box.widths
    t = np.clip((pts[0] - lower) / box.widths, 0.0, 1.0)
    pairs = np.stack([1.0 - t, t], axis=1)
    weights = _corner_weight_matrix(box, pts, cells)[0]
    return InterpWeights(cell=box.flat(cells[0]), pairs=pairs, corner_weights=weights)


def _interpolated_tables(partition: FouPartition, i: int, points: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Interpolated (lower, upper) bounds, shape (npts, p, c, tau + 1)."""
    box = partition.boxes[i]
    cells = box.locate(points)
    flat = np.ravel_multi_index(tuple(cells.T), box.counts)
    weights = _corner_weight_matrix(box, points, cells)
    lo = np.einsum("pcnkz,nk->npcz", partition.delta_lower[i][:, :, flat], weights)
    hi = np.einsum("pcnkz,nk->npcz", partition.delta_upper[i][:, :, flat], weights)
    return lo, hi


def reconstruct_bounds(
    partition: FouPartition, x: Any, i: int, l: int, j: int, z: int
) -> tuple[float, float]:
    """
    Bounding functions of slice ``z`` of rule pair (l, j) evaluated at ``x``.

    Raises:
        PartitionError: If ``x`` lies outside the box
    """
    lo, hi = _interpolated_tables(partition, i, np.asarray(x, dtype=float).reshape(1, -1))
    return float(lo[0, l, j, z]), float(hi[0, l, j, z])


def _slices(env_lo: np.ndarray, env_hi: np.ndarray, tau: int) -> tuple[np.ndarray, np.ndarray]:
    """Slice bounds with a trailing slice axis: (..., tau + 1)."""
    steps = np.arange(tau + 1) / (tau + 1)
    width = (env_hi - env_lo)[..., None]
    s_lo = env_lo[..., None] + steps * width
    s_hi = env_lo[..., None] + (steps + 1.0 / (tau + 1)) * width
    return s_lo, s_hi


def active_subfou(
    partition: FouPartition,
    system: LargeScaleSystem,
    i: int,
    l: int,
    j: int,
    x: Any,
    grade: Optional[float] = None,
) -> int:
    """
    Index of the slice that contains the realised grade at ``x``.

    Args:
        grade: Realised combined grade; evaluated with the system's
            realizations when omitted
    """
    x = np.asarray(x, dtype=float)
    if grade is None:
        grade = float(combined_grades(system, i, x)[l, j])
    env_lo, env_hi = combined_grade_bounds_batch(system, i, x.reshape(1, -1))
    lo, hi = float(env_lo[0, l, j]), float(env_hi[0, l, j])
    width = hi - lo
    if width <= 0.0:
        return 0
    z = int(np.floor((grade - lo) / width * partition.tau_plus_1))
    return int(np.clip(z, 0, partition.tau))


class PartitionBuilder:
    """Compute delta tables by lattice sampling plus bounded polishing."""

    def __init__(
        self,
        tau: int = 0,
        samples_per_cell: int = 9,
        margin: float = 1e-9,
        polish: bool = True,
        verbose: bool = True,
    ) -> None:
        """
        Initialize the builder.

        Args:
            tau: Sub-FOU count minus one
            samples_per_cell: Lattice points per cell and dimension (>= 8)
            margin: Widening applied to the extrema
            polish: Refine extrema with L-BFGS-B inside the cell
            verbose: Enable verbose logging
        """
        if tau < 0:
            raise PartitionError(f"tau must be >= 0, got {tau}")
        if samples_per_cell < 8:
            raise PartitionError(f"samples_per_cell must be >= 8, got {samples_per_cell}")
        self.tau = int(tau)
        self.samples_per_cell = int(samples_per_cell)
        self.margin = float(margin)
        self.polish = polish
        self.logger = get_logger(verbose=verbose)

    def build(self, system: LargeScaleSystem, boxes: Sequence[StateBox]) -> FouPartition:
        """
        Build the partition for every subsystem.

        Raises:
            PartitionError: If grades are undefined somewhere in a cell
        """
        if len(boxes) != system.N:
            raise PartitionError(f"expected {system.N} state boxes, got {len(boxes)}")

        d_lo, d_hi, g_min, g_max = [], [], [], []
        for sub, box in zip(system.subsystems, boxes):
            if box.n != sub.n:
                raise PartitionError(f"subsystem {sub.index}: box dimension {box.n} != state dimension {sub.n}")
            self.logger.info(
                f"subsystem {sub.index}: {box.q} cells {box.counts}, {self.tau + 1} sub-FOU(s)"
            )
            tables = self._build_subsystem(system, sub.index, box)
            d_lo.append(tables[0])
            d_hi.append(tables[1])
            g_min.append(tables[2])
            g_max.append(tables[3])

        return FouPartition(
            boxes=list(boxes),
            tau=self.tau,
            delta_lower=d_lo,
            delta_upper=d_hi,
            grade_min=g_min,
            grade_max=g_max,
            samples_per_cell=self.samples_per_cell,
            margin=self.margin,
        )

    def _build_subsystem(self, system: LargeScaleSystem, i: int, box: StateBox) -> tuple[np.ndarray, ...]:
        p, c = system.subsystems[i].p, system.controllers[i].c
        n_corners, n_slices = 2 ** box.n, self.tau + 1
        d_lo = np.empty((p, c, box.q, n_corners, n_slices))
        d_hi = np.empty_like(d_lo)
        g_min = np.empty((p, c, box.q))
        g_max = np.empty_like(g_min)

        for k in range(box.q):
            lo_x, hi_x = box.cell_bounds(k)
            points = box.lattice(k, self.samples_per_cell)
            try:
                env_lo, env_hi = combined_grade_bounds_batch(system, i, points)
                realised = np.stack([combined_grades(system, i, x) for x in points])
            except DegenerateGradeError as e:
                raise PartitionError(
                    f"subsystem {i}, cell {box.unflat(k)} [{lo_x.tolist()}, {hi_x.tolist()}]: "
                    f"grades undefined ({e.message})",
                    details={"subsystem": i, "cell": list(box.unflat(k))},
                )
            g_min[:, :, k] = realised.min(axis=0)
            g_max[:, :, k] = realised.max(axis=0)

            s_lo, s_hi = _slices(env_lo, env_hi, self.tau)
            cell_min = s_lo.min(axis=0)
            cell_max = s_hi.max(axis=0)
            if self.polish:
                cell_min, cell_max = self._polish(system, i, points, s_lo, s_hi, cell_min, cell_max, lo_x, hi_x)

            d_lo[:, :, k, :, :] = np.clip(cell_min - self.margin, 0.0, 1.0)[:, :, None, :]
            d_hi[:, :, k, :, :] = np.clip(cell_max + self.margin, 0.0, 1.0)[:, :, None, :]
            self.logger.progress(f"subsystem {i} cells", k + 1, box.q)

        return d_lo, d_hi, g_min, g_max

    def _polish(
        self,
        system: LargeScaleSystem,
        i: int,
        points: np.ndarray,
        s_lo: np.ndarray,
        s_hi: np.ndarray,
        cell_min: np.ndarray,
        cell_max: np.ndarray,
        lo_x: np.ndarray,
        hi_x: np.ndarray,
    ) -> tuple[np.ndarray, np.ndarray]:
        """Refine each sampled extremum with a bounded local search from its best sample."""
        bounds = list(zip(lo_x, hi_x))
        cell_min = cell_min.copy()
        cell_max = cell_max.copy()

        def slice_value(x: np.ndarray, l: int, j: int, z: int, upper: bool) -> float:
            e_lo, e_hi = combined_grade_bounds_batch(system, i, x.reshape(1, -1))
            lo, hi = _slices(e_lo, e_hi, self.tau)
            return float((hi if upper else lo)[0, l, j, z])

        p, c, n_slices = cell_min.shape
        for l, j, z in itertools.product(range(p), range(c), range(n_slices)):
            start = points[int(np.argmin(s_lo[:, l, j, z]))]
            res = minimize(
                lambda x: slice_value(x, l, j, z, False), start, method="L-BFGS-B", bounds=bounds
            )
            # L-BFGS-B iterates stay inside the bounds, so res.fun is attained in the cell
            cell_min[l, j, z] = min(cell_min[l, j, z], float(res.fun))

            start = points[int(np.argmax(s_hi[:, l, j, z]))]
            res = minimize(
                lambda x: -slice_value(x, l, j, z, True), start, method="L-BFGS-B", bounds=bounds
            )
            cell_max[l, j, z] = max(cell_max[l, j, z], -float(res.fun))
        return cell_min, cell_max


def _as_boxes(box: Union[StateBox, Sequence[StateBox]], system: LargeScaleSystem) -> list[StateBox]:
    if isinstance(box, StateBox):
        return [box] * system.N
    return list(box)


def build_partition(
    system: LargeScaleSystem,
    box: Union[StateBox, Sequence[StateBox]],
    q_per_dim: Optional[Union[int, Sequence[int]]] = None,
    tau: int = 0,
    samples_per_cell: int = 9,
    margin: float = 1e-9,
    polish: bool = True,
    verbose: bool = False,
) -> FouPartition:
    """
    Partition every subsystem's state box and FOU.

    Args:
        system: System whose plant and controller rule bases are partitioned
        box: One box shared by all subsystems or one box per subsystem
        q_per_dim: Cells per dimension, overriding the boxes' own counts
        tau: Sub-FOU count minus one
        samples_per_cell: Lattice points per cell and dimension (>= 8)
        margin: Widening applied to sampled extrema
        polish: Refine extrema with bounded local optimisation
        verbose: Enable verbose logging

    Returns:
        FouPartition with complete delta tables
    """
    boxes = _as_boxes(box, system)
    if q_per_dim is not None:
        boxes = [b.with_counts(q_per_dim) for b in boxes]
    builder = PartitionBuilder(
        tau=tau, samples_per_cell=samples_per_cell, margin=margin, polish=polish, verbose=verbose
    )
    return builder.build(system, boxes)


@dataclass
class EnvelopeAudit:
    """Outcome of re-checking the delta tables on a finer lattice."""

    worst_margin: float
    n_points: int
    per_subsystem: list[float]
    realised_worst_margin: float

    @property
    def passed(self) -> bool:
        return self.worst_margin >= -AUDIT_TOL and self.realised_worst_margin >= -AUDIT_TOL

    def to_dict(self) -> dict[str, Any]:
        return {
            "worst_margin": self.worst_margin,
            "realised_worst_margin": self.realised_worst_margin,
            "n_points": self.n_points,
            "per_subsystem": self.per_subsystem,
            "passed": self.passed,
        }


def audit_envelope(
    partition: FouPartition,
    system: LargeScaleSystem,
    density: int = 10,
    rng: Optional[np.random.Generator] = None,
    n_realised: int = 200,
) -> EnvelopeAudit:
    """
    Re-check the envelope on a lattice ``density`` times finer than the
    sampling lattice.

    Every slice's lower and upper functions must stay inside its
    interpolated bounds; additionally ``n_realised`` random states check the
    realised grade against the bounds of its active slice.

    Returns:
        EnvelopeAudit with the worst (most negative) margins found
    """
    rng = rng if rng is not None else np.random.default_rng(0)
    worst_all = np.inf
    realised_worst = np.inf
    per_sub = []
    total = 0

    for sub in system.subsystems:
        i = sub.index
        box = partition.boxes[i]
        axes = [
            np.linspace(lo, hi, box.counts[r] * (partition.samples_per_cell - 1) * density + 1)
            for r, (lo, hi) in enumerate(zip(box.lower, box.upper))
        ]
        points = np.stack([g.ravel() for g in np.meshgrid(*axes, indexing="ij")], axis=1)
        total += points.shape[0]

        env_lo, env_hi = combined_grade_bounds_batch(system, i, points)
        s_lo, s_hi = _slices(env_lo, env_hi, partition.tau)
        b_lo, b_hi = _interpolated_tables(partition, i, points)
        worst = float(min(np.min(s_lo - b_lo), np.min(b_hi - s_hi)))
        per_sub.append(worst)
        worst_all = min(worst_all, worst)

        span = np.asarray(box.upper) - np.asarray(box.lower)
        for x in np.asarray(box.lower) + rng.random((n_realised, box.n)) * span:
            h = combined_grades(system, i, x)
            lo_x, hi_x = _interpolated_tables(partition, i, x.reshape(1, -1))
            for l, j in itertools.product(range(sub.p), range(system.controllers[i].c)):
                z = active_subfou(partition, system, i, l, j, x, grade=float(h[l, j]))
                realised_worst = min(
                    realised_worst, h[l, j] - lo_x[0, l, j, z], hi_x[0, l, j, z] - h[l, j]
                )

    return EnvelopeAudit(
        worst_margin=float(worst_all),
        n_points=total,
        per_subsystem=per_sub,
        realised_worst_margin=float(realised_worst),
    )


def save_partition(partition: FouPartition, path: Path) -> None:
    """Write a partition as JSON (nested lists)."""
    data = {
        "tau": partition.tau,
        "samples_per_cell": partition.samples_per_cell,
        "margin": partition.margin,
        "boxes": [box.to_dict() for box in partition.boxes],
        "delta_lower": [t.tolist() for t in partition.delta_lower],
        "delta_upper": [t.tolist() for t in partition.delta_upper],
        "grade_min": [t.tolist() for t in partition.grade_min],
        "grade_max": [t.tolist() for t in partition.grade_max],
    }
    with open(path, "w") as f:
        json.dump(data, f)
        f.write("\n")


def load_partition(path: Path) -> FouPartition:
    """
    Read a partition written by :func:`save_partition`.

    Raises:
        PartitionError: If the content is malformed
    """
    with open(path, "r") as f:
        data = json.load(f)
    try:
        return FouPartition(
            boxes=[StateBox(tuple(b["lower"]), tuple(b["upper"]), tuple(b["counts"])) for b in data["boxes"]],
            tau=int(data["tau"]),
            delta_lower=[np.asarray(t, dtype=float) for t in data["delta_lower"]],
            delta_upper=[np.asarray(t, dtype=float) for t in data["delta_upper"]],
            grade_min=[np.asarray(t, dtype=float) for t in data.get("grade_min", [])],
            grade_max=[np.asarray(t, dtype=float) for t in data.get("grade_max", [])],
            samples_per_cell=int(data.get("samples_per_cell", 9)),
            margin=float(data.get("margin", 1e-9)),
        )
    except (KeyError, TypeError) as e:
        raise PartitionError(f"malformed partition file {path}: {e}")
