"""Constraints and their vectorized semidefinite feasibility form.

Every constraint is normalised to ``s * F(x) - eps * I >= 0`` with
``s = +1`` for positive senses and ``s = -1`` for negative ones, where
``F(x) = F0 + sum_k x_k F_k`` and ``x`` stacks the free scalars of every
declared variable (upper triangle for symmetric variables, column-major
``vec`` for rectangular ones).
"""

from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Any, Mapping, Optional, Sequence

import numpy as np

from ..errors import AssemblyError, ModelInputError
from .expressions import AffineBlockMatrix, DecisionVar, Term

# Strictness margin relative to the coefficient scale of a constraint
DEFAULT_EPSILON = 1e-6


class Sense(Enum):
    """Matrix inequality senses."""

    POSITIVE = ">"
    POSITIVE_SEMI = ">="
    NEGATIVE = "<"
    NEGATIVE_SEMI = "<="

    @property
    def strict(self) -> bool:
        return self in (Sense.POSITIVE, Sense.NEGATIVE)

    @property
    def sign(self) -> float:
        return 1.0 if self in (Sense.POSITIVE, Sense.POSITIVE_SEMI) else -1.0


@dataclass
class Constraint:
    """
    One matrix inequality ``matrix <sense> 0``.

    ``epsilon`` defaults to ``DEFAULT_EPSILON * max(1, scale)`` for strict
    senses, where the scale is the largest coefficient magnitude over the
    variable terms. Constants do not enter the scale, so shifting a
    constant (for example the attenuation level) leaves epsilon unchanged.
    """

    name: str
    matrix: AffineBlockMatrix
    sense: Sense
    epsilon: Optional[float] = None
    family: str = ""
    tags: tuple[Any, ...] = ()
    relative_epsilon: float = DEFAULT_EPSILON

    def __post_init__(self) -> None:
        if self.sense.strict:
            if self.epsilon is None:
                self.epsilon = self.relative_epsilon * max(1.0, self.matrix.magnitude())
            if not self.epsilon > 0:
                raise ModelInputError(f"constraint {self.name}: strict sense needs epsilon > 0")
        else:
            self.epsilon = 0.0 if self.epsilon is None else float(self.epsilon)
            if self.epsilon < 0:
                raise ModelInputError(f"constraint {self.name}: epsilon must be >= 0")

    @property
    def dim(self) -> int:
        return self.matrix.dim

    def margin(self, values: Mapping[str, np.ndarray]) -> float:
        """``lambda_min(s * F)`` at the given values (positive means satisfied)."""
        mat = self.sense.sign * self.matrix.evaluate(values)
        return float(np.linalg.eigvalsh(mat)[0])


def _commutation(rows: int, cols: int) -> np.ndarray:
    """K with ``K @ vec(V) = vec(V.T)`` for V of shape (rows, cols)."""
    K = np.zeros((rows * cols, rows * cols))
    for i in range(rows):
        for j in range(cols):
            K[i * cols + j, j * rows + i] = 1.0
    return K


def _unpacking(var: DecisionVar) -> np.ndarray:
    """D with ``vec(V) = D @ x_var``."""
    rows, cols = var.shape
    if not var.symmetric:
        return np.eye(rows * cols)
    iu = np.triu_indices(rows)
    D = np.zeros((rows * rows, var.size))
    for k, (r, c) in enumerate(zip(*iu)):
        D[c * rows + r, k] = 1.0
        D[r * rows + c, k] = 1.0
    return D


@dataclass
class ConicBlock:
    """One PSD block ``reshape(const + coeffs @ x) >= 0`` (column-major)."""

    name: str
    dim: int
    const: np.ndarray
    coeffs: np.ndarray
    sign: float
    epsilon: float
    strict: bool
    family: str = ""
    tags: tuple[Any, ...] = ()

    def matrix(self, x: np.ndarray) -> np.ndarray:
        vec = self.const.reshape(-1, order="F") + self.coeffs @ x
        mat = vec.reshape((self.dim, self.dim), order="F")
        return 0.5 * (mat + mat.T)


@dataclass
class FeasibilityProblem:
    """Standard-form PSD feasibility problem with the variable layout kept."""

    variables: list[DecisionVar]
    constraints: list[Constraint]
    blocks: list[ConicBlock]
    offsets: dict[str, tuple[int, int]] = field(default_factory=dict)

    @property
    def n_x(self) -> int:
        return sum(v.size for v in self.variables)

    def variable(self, name: str) -> DecisionVar:
        for v in self.variables:
            if v.name == name:
                return v
        raise AssemblyError(f"undeclared variable {name}")

    def pack(self, values: Mapping[str, np.ndarray]) -> np.ndarray:
        """Stack variable values into the solver vector."""
        x = np.zeros(self.n_x)
        for var in self.variables:
            if var.name not in values:
                raise AssemblyError(f"no value for variable {var.name}")
            V = np.asarray(values[var.name], dtype=float)
            if V.shape != var.shape:
                raise ModelInputError(f"value of {var.name} has shape {V.shape}, expected {var.shape}")
            start, stop = self.offsets[var.name]
            if var.symmetric:
                x[start:stop] = (0.5 * (V + V.T))[np.triu_indices(var.shape[0])]
            else:
                x[start:stop] = V.reshape(-1, order="F")
        return x

    def unpack(self, x: np.ndarray) -> dict[str, np.ndarray]:
        """Inverse of :meth:`pack`."""
        x = np.asarray(x, dtype=float).ravel()
        if x.size != self.n_x:
            raise ModelInputError(f"solution vector has {x.size} entries, expected {self.n_x}")
        values: dict[str, np.ndarray] = {}
        for var in self.variables:
            start, stop = self.offsets[var.name]
            rows, cols = var.shape
            if var.symmetric:
                V = np.zeros((rows, rows))
                iu = np.triu_indices(rows)
                V[iu] = x[start:stop]
                V[(iu[1], iu[0])] = x[start:stop]
            else:
                V = x[start:stop].reshape((rows, cols), order="F")
            values[var.name] = V
        return values

    def residuals(self, x: np.ndarray) -> list[float]:
        """``lambda_min`` of every canonical block at ``x``."""
        return [float(np.linalg.eigvalsh(b.matrix(x))[0]) for b in self.blocks]

    def counts(self) -> dict[str, Any]:
        """Variable and constraint tallies, per family."""
        families: dict[str, int] = {}
        for c in self.constraints:
            families[c.family] = families.get(c.family, 0) + 1
        return {
            "variables": len(self.variables),
            "symmetric_variables": sum(v.symmetric for v in self.variables),
            "rectangular_variables": sum(not v.symmetric for v in self.variables),
            "scalars": self.n_x,
            "constraints": len(self.constraints),
            "families": dict(sorted(families.items())),
        }


def _collect_variables(
    constraints: Sequence[Constraint], declared: Optional[Sequence[DecisionVar]]
) -> list[DecisionVar]:
    seen: dict[str, DecisionVar] = {}
    if declared is not None:
        for var in declared:
            if var.name in seen and seen[var.name] != var:
                raise AssemblyError(f"variable {var.name} declared twice with different layouts")
            seen[var.name] = var
    for con in constraints:
        for var in con.matrix.variables():
            known = seen.get(var.name)
            if known is None:
                if declared is not None:
                    raise AssemblyError(
                        f"constraint {con.name} uses undeclared variable {var.name}",
                        details={"constraint": con.name, "variable": var.name},
                    )
                seen[var.name] = var
            elif known.shape != var.shape or known.symmetric != var.symmetric:
                raise AssemblyError(f"variable {var.name} used with two different layouts")
    return list(seen.values())


def _term_coeffs(term: Term, unpack: np.ndarray, commute: Optional[np.ndarray]) -> np.ndarray:
    """Coefficient block of one term: ``vec(term) = C @ x_var``."""
    K = np.kron(term.right.T, term.left)
    if term.transpose:
        K = K @ commute  # type: ignore[operator]
    return term.scale * (K @ unpack)


def to_feasibility(
    constraints: Sequence[Constraint],
    variables: Optional[Sequence[DecisionVar]] = None,
) -> FeasibilityProblem:
    """
    Vectorize constraints into a :class:`FeasibilityProblem`.

    Args:
        constraints: Matrix inequalities
        variables: Declared variables in solver order; collected from the
            constraints (first use first) when omitted

    Raises:
        AssemblyError: If a constraint uses an undeclared variable
    """
    names = [c.name for c in constraints]
    if len(set(names)) != len(names):
        raise AssemblyError("constraint names must be unique")
    var_list = _collect_variables(constraints, variables)

    offsets: dict[str, tuple[int, int]] = {}
    start = 0
    for var in var_list:
        offsets[var.name] = (start, start + var.size)
        start += var.size
    n_x = start

    unpackers = {v.name: _unpacking(v) for v in var_list}
    commuters = {v.name: _commutation(*v.shape) for v in var_list}

    blocks = []
    for con in constraints:
        full = con.matrix.expr()
        d = con.dim
        coeffs = np.zeros((d * d, n_x))
        for term in full.terms:
            a, b = offsets[term.var.name]
            coeffs[:, a:b] += _term_coeffs(term, unpackers[term.var.name], commuters[term.var.name])
        # symmetrise column by column
        cube = coeffs.reshape((d, d, n_x), order="F")
        cube = 0.5 * (cube + cube.transpose(1, 0, 2))
        const = 0.5 * (full.const + full.const.T)

        s = con.sense.sign
        eps = float(con.epsilon or 0.0)
        blocks.append(
            ConicBlock(
                name=con.name,
                dim=d,
                const=s * const - eps * np.eye(d),
                coeffs=s * cube.reshape((d * d, n_x), order="F"),
                sign=s,
                epsilon=eps,
                strict=con.sense.strict,
                family=con.family,
                tags=con.tags,
            )
        )
    return FeasibilityProblem(
        variables=var_list, constraints=list(constraints), blocks=blocks, offsets=offsets
    )


def _sdpa_number(value: float) -> str:
    return repr(float(value))


def write_sdpa(problem: FeasibilityProblem, path: Path) -> None:
    """
    Write the problem in SDPA sparse format (``.dat-s``) with a zero objective.

    SDPA's primal form is ``sum_k x_k F_k - F0 >= 0``, so ``F0`` is the
    negated canonical constant.
    """
    lines = [
        f'"it2synth feasibility problem: {len(problem.blocks)} blocks, {problem.n_x} scalars"',
        str(problem.n_x),
        str(len(problem.blocks)),
        " ".join(str(b.dim) for b in problem.blocks),
        " ".join("0" for _ in range(problem.n_x)) or "0",
    ]
    for blk_no, block in enumerate(problem.blocks, start=1):
        d = block.dim
        iu = np.triu_indices(d)
        F0 = -block.const
        for r, c in zip(*iu):
            if F0[r, c] != 0.0:
                lines.append(f"0 {blk_no} {r + 1} {c + 1} {_sdpa_number(F0[r, c])}")
        cube = block.coeffs.reshape((d, d, problem.n_x), order="F")
        for k in np.flatnonzero(np.any(block.coeffs != 0.0, axis=0)):
            Fk = cube[:, :, k]
            for r, c in zip(*iu):
                if Fk[r, c] != 0.0:
                    lines.append(f"{k + 1} {blk_no} {r + 1} {c + 1} {_sdpa_number(Fk[r, c])}")
    Path(path).write_text("\n".join(lines) + "\n")
