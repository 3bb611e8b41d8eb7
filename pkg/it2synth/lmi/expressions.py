"""Affine matrix expressions in matrix decision variables.

An :class:`AffineExpr` is ``const + sum(scale * left @ V @ right)`` (or with
``V.T``) over declared :class:`DecisionVar` objects. Block matrices are kept
as their upper triangle; the lower triangle mirrors it, which is the ``*``
notation of symmetric LMIs.
"""

from dataclasses import dataclass, field
from typing import Any, Mapping, Optional, Sequence, Union

import numpy as np

from ..errors import AssemblyError, ModelInputError


@dataclass(frozen=True)
class DecisionVar:
    """A matrix decision variable."""

    name: str
    shape: tuple[int, int]
    symmetric: bool = False
    tags: tuple[Any, ...] = field(default=(), compare=False)

    def __post_init__(self) -> None:
        rows, cols = (int(v) for v in self.shape)
        object.__setattr__(self, "shape", (rows, cols))
        if rows < 1 or cols < 1:
            raise ModelInputError(f"variable {self.name}: dimensions must be positive, got {self.shape}")
        if self.symmetric and rows != cols:
            raise ModelInputError(f"variable {self.name}: symmetric variables must be square")

    @classmethod
    def sym(cls, name: str, n: int, tags: tuple[Any, ...] = ()) -> "DecisionVar":
        return cls(name, (n, n), symmetric=True, tags=tags)

    @classmethod
    def rect(cls, name: str, rows: int, cols: int, tags: tuple[Any, ...] = ()) -> "DecisionVar":
        return cls(name, (rows, cols), symmetric=False, tags=tags)

    @property
    def size(self) -> int:
        """Number of free scalars."""
        rows, cols = self.shape
        return rows * (rows + 1) // 2 if self.symmetric else rows * cols

    def expr(self) -> "AffineExpr":
        rows, cols = self.shape
        return AffineExpr(
            const=np.zeros((rows, cols)),
            terms=(Term(self, np.eye(rows), np.eye(cols)),),
        )


@dataclass(frozen=True)
class Term:
    """``scale * left @ var @ right`` (``var.T`` when ``transpose``)."""

    var: DecisionVar
    left: np.ndarray
    right: np.ndarray
    transpose: bool = False
    scale: float = 1.0

    @property
    def shape(self) -> tuple[int, int]:
        return self.left.shape[0], self.right.shape[1]

    def evaluate(self, value: np.ndarray) -> np.ndarray:
        v = value.T if self.transpose else value
        return self.scale * (self.left @ v @ self.right)

    def magnitude(self) -> float:
        return abs(self.scale) * float(np.max(np.abs(self.left))) * float(np.max(np.abs(self.right)))


Operand = Union["AffineExpr", DecisionVar, np.ndarray, float, int]


def as_expr(value: Operand, shape: Optional[tuple[int, int]] = None) -> "AffineExpr":
    """Wrap variables, arrays and scalars (scalars need ``shape``)."""
    if isinstance(value, AffineExpr):
        return value
    if isinstance(value, DecisionVar):
        return value.expr()
    arr = np.asarray(value, dtype=float)
    if arr.ndim == 0:
        if shape is None:
            raise ModelInputError("scalar constant needs an explicit shape")
        arr = np.full(shape, float(arr))
    elif arr.ndim == 1:
        arr = arr.reshape(-1, 1)
    return AffineExpr(const=arr, terms=())


@dataclass(frozen=True)
class AffineExpr:
    """Matrix-valued affine function of decision variables."""

    const: np.ndarray
    terms: tuple[Term, ...] = ()

    # defer numpy binary operators to the reflected methods below
    __array_ufunc__ = None

    def __post_init__(self) -> None:
        const = np.atleast_2d(np.asarray(self.const, dtype=float))
        object.__setattr__(self, "const", const)
        for t in self.terms:
            if t.shape != const.shape:
                raise ModelInputError(f"term on {t.var.name} has shape {t.shape}, expected {const.shape}")

    @classmethod
    def zeros(cls, rows: int, cols: int) -> "AffineExpr":
        return cls(const=np.zeros((rows, cols)))

    @property
    def shape(self) -> tuple[int, int]:
        return self.const.shape  # type: ignore[return-value]

    @property
    def T(self) -> "AffineExpr":
        return AffineExpr(
            const=self.const.T,
            terms=tuple(
                Term(t.var, t.right.T, t.left.T, not t.transpose, t.scale) for t in self.terms
            ),
        )

    def variables(self) -> list[DecisionVar]:
        seen: dict[str, DecisionVar] = {}
        for t in self.terms:
            seen.setdefault(t.var.name, t.var)
        return list(seen.values())

    def is_zero(self) -> bool:
        return not self.terms and not np.any(self.const)

    def _check_shape(self, other: "AffineExpr", op: str) -> None:
        if self.shape != other.shape:
            raise ModelInputError(f"cannot {op} expressions of shapes {self.shape} and {other.shape}")

    def __add__(self, other: Operand) -> "AffineExpr":
        other = as_expr(other, self.shape)
        self._check_shape(other, "add")
        return AffineExpr(self.const + other.const, self.terms + other.terms)

    __radd__ = __add__

    def __neg__(self) -> "AffineExpr":
        return self * -1.0

    def __sub__(self, other: Operand) -> "AffineExpr":
        return self + (-as_expr(other, self.shape))

    def __rsub__(self, other: Operand) -> "AffineExpr":
        return as_expr(other, self.shape) + (-self)

    def __mul__(self, scalar: float) -> "AffineExpr":
        if not np.isscalar(scalar):
            raise ModelInputError("use @ for matrix products; * takes a scalar")
        s = float(scalar)
        return AffineExpr(
            self.const * s,
            tuple(Term(t.var, t.left, t.right, t.transpose, t.scale * s) for t in self.terms),
        )

    __rmul__ = __mul__

    def __matmul__(self, right: Any) -> "AffineExpr":
        """``expr @ M`` for a constant matrix M."""
        if isinstance(right, (AffineExpr, DecisionVar)):
            raise ModelInputError("products of two variable expressions are not affine")
        M = np.atleast_2d(np.asarray(right, dtype=float))
        if M.shape[0] != self.shape[1]:
            raise ModelInputError(f"shape mismatch in product: {self.shape} @ {M.shape}")
        return AffineExpr(
            self.const @ M,
            tuple(Term(t.var, t.left, t.right @ M, t.transpose, t.scale) for t in self.terms),
        )

    def __rmatmul__(self, left: Any) -> "AffineExpr":
        """``M @ expr`` for a constant matrix M."""
        M = np.atleast_2d(np.asarray(left, dtype=float))
        if M.shape[1] != self.shape[0]:
            raise ModelInputError(f"shape mismatch in product: {M.shape} @ {self.shape}")
        return AffineExpr(
            M @ self.const,
            tuple(Term(t.var, M @ t.left, t.right, t.transpose, t.scale) for t in self.terms),
        )

    def evaluate(self, values: Mapping[str, np.ndarray]) -> np.ndarray:
        """
        Numeric value for the given variable assignment.

        Raises:
            AssemblyError: If a variable has no value
            ModelInputError: If a value has the wrong shape
        """
        out = self.const.copy()
        for t in self.terms:
            if t.var.name not in values:
                raise AssemblyError(f"no value for variable {t.var.name}")
            value = np.asarray(values[t.var.name], dtype=float)
            if value.shape != t.var.shape:
                raise ModelInputError(
                    f"value of {t.var.name} has shape {value.shape}, expected {t.var.shape}"
                )
            out += t.evaluate(value)
        return out

    def magnitude(self) -> float:
        """Largest coefficient magnitude over the variable terms."""
        return max((t.magnitude() for t in self.terms), default=0.0)


def he(expr: Operand) -> AffineExpr:
    """Hermitian part ``expr + expr.T``."""
    e = as_expr(expr)
    return e + e.T


def selector(sizes: Sequence[int], index: int) -> np.ndarray:
    """Column selector E with ``E.T @ full`` picking block row ``index``."""
    offsets = np.concatenate([[0], np.cumsum(sizes)])
    E = np.zeros((int(offsets[-1]), sizes[index]))
    E[offsets[index] : offsets[index + 1], :] = np.eye(sizes[index])
    return E


BlockEntry = Optional[Operand]


class AffineBlockMatrix:
    """
    Symmetric block matrix stored by its upper triangle.

    ``blocks[(r, c)]`` with r <= c holds block (r, c); block (c, r) is its
    transpose. Missing blocks are zero.
    """

    def __init__(self, sizes: Sequence[int], blocks: Mapping[tuple[int, int], AffineExpr]) -> None:
        self.sizes = [int(s) for s in sizes]
        if not self.sizes or any(s < 1 for s in self.sizes):
            raise ModelInputError(f"block sizes must be positive, got {self.sizes}")
        self.blocks: dict[tuple[int, int], AffineExpr] = {}
        for (r, c), expr in blocks.items():
            if r > c:
                raise ModelInputError(f"block ({r}, {c}) is below the diagonal; give the upper one")
            expected = (self.sizes[r], self.sizes[c])
            if expr.shape != expected:
                raise ModelInputError(f"block ({r}, {c}) has shape {expr.shape}, expected {expected}")
            if not expr.is_zero():
                self.blocks[(r, c)] = expr

    @classmethod
    def symmetric(cls, upper_rows: Sequence[Sequence[BlockEntry]]) -> "AffineBlockMatrix":
        """
        Build from rows of the upper triangle.

        Row r lists blocks (r, r), (r, r+1), ...; entries left of the
        diagonal may be given as ``"*"`` or omitted. ``None`` or ``0`` is a
        zero block. Diagonal blocks fix the block sizes and must be given as
        matrices or expressions.
        """
        nb = len(upper_rows)
        rows = []
        for r, row in enumerate(upper_rows):
            row = list(row)
            if len(row) == nb:
                row = row[r:]
            if len(row) != nb - r:
                raise ModelInputError(f"row {r}: expected {nb - r} upper-triangular entries, got {len(row)}")
            rows.append(row)

        sizes = []
        for r in range(nb):
            diag = rows[r][0]
            if diag is None or (np.isscalar(diag) and not isinstance(diag, str)):
                raise ModelInputError(f"diagonal block {r} must be a matrix or expression")
            sizes.append(as_expr(diag).shape[0])

        blocks = {}
        for r in range(nb):
            for off, entry in enumerate(rows[r]):
                c = r + off
                if entry is None or isinstance(entry, str):
                    continue
                shape = (sizes[r], sizes[c])
                if np.isscalar(entry) and float(entry) == 0.0:  # type: ignore[arg-type]
                    continue
                blocks[(r, c)] = as_expr(entry, shape)
        return cls(sizes, blocks)

    @property
    def dim(self) -> int:
        return int(sum(self.sizes))

    @property
    def n_blocks(self) -> int:
        return len(self.sizes)

    def block(self, r: int, c: int) -> AffineExpr:
        if r <= c:
            return self.blocks.get((r, c), AffineExpr.zeros(self.sizes[r], self.sizes[c]))
        return self.block(c, r).T

    def variables(self) -> list[DecisionVar]:
        seen: dict[str, DecisionVar] = {}
        for expr in self.blocks.values():
            for v in expr.variables():
                seen.setdefault(v.name, v)
        return list(seen.values())

    def expr(self) -> AffineExpr:
        """The full matrix as one expression (lower triangle mirrored)."""
        total = AffineExpr.zeros(self.dim, self.dim)
        for (r, c), b in self.blocks.items():
            Er, Ec = selector(self.sizes, r), selector(self.sizes, c)
            total = total + Er @ b @ Ec.T
            if r != c:
                total = total + Ec @ b.T @ Er.T
        return total

    def evaluate(self, values: Mapping[str, np.ndarray]) -> np.ndarray:
        """Numeric symmetric matrix; diagonal blocks are symmetrised."""
        out = np.zeros((self.dim, self.dim))
        offsets = np.concatenate([[0], np.cumsum(self.sizes)]).astype(int)
        for (r, c), b in self.blocks.items():
            val = b.evaluate(values)
            rs = slice(offsets[r], offsets[r + 1])
            cs = slice(offsets[c], offsets[c + 1])
            if r == c:
                out[rs, cs] += 0.5 * (val + val.T)
            else:
                out[rs, cs] += val
                out[cs, rs] += val.T
        return out

    def magnitude(self) -> float:
        return max((b.magnitude() for b in self.blocks.values()), default=0.0)

    def _check_same_layout(self, other: "AffineBlockMatrix") -> None:
        if self.sizes != other.sizes:
            raise ModelInputError(f"block layouts differ: {self.sizes} vs {other.sizes}")

    def __add__(self, other: "AffineBlockMatrix") -> "AffineBlockMatrix":
        self._check_same_layout(other)
        blocks = dict(self.blocks)
        for key, b in other.blocks.items():
            blocks[key] = blocks[key] + b if key in blocks else b
        return AffineBlockMatrix(self.sizes, blocks)

    def scaled(self, factor: float) -> "AffineBlockMatrix":
        return AffineBlockMatrix(self.sizes, {k: b * factor for k, b in self.blocks.items()})

    def __neg__(self) -> "AffineBlockMatrix":
        return self.scaled(-1.0)

    def __sub__(self, other: "AffineBlockMatrix") -> "AffineBlockMatrix":
        return self + (-other)

    @staticmethod
    def weighted_sum(
        mats: Sequence["AffineBlockMatrix"], weights: Sequence[float]
    ) -> "AffineBlockMatrix":
        """``sum(w * M)``; all matrices must share one block layout."""
        if len(mats) != len(weights) or not mats:
            raise ModelInputError("weighted_sum needs matching, non-empty matrices and weights")
        total = mats[0].scaled(float(weights[0]))
        for m, w in zip(mats[1:], weights[1:]):
            if float(w) != 0.0:
                total = total + m.scaled(float(w))
        return total

    @classmethod
    def split(cls, sizes: Sequence[int], full: AffineExpr) -> "AffineBlockMatrix":
        """Split a full symmetric expression into the given block layout."""
        blocks = {}
        for r in range(len(sizes)):
            for c in range(r, len(sizes)):
                b = selector(sizes, r).T @ full @ selector(sizes, c)
                blocks[(r, c)] = b
        return cls(sizes, blocks)

    @classmethod
    def single(cls, expr: Operand) -> "AffineBlockMatrix":
        e = as_expr(expr)
        return cls([e.shape[0]], {(0, 0): e})


def schur_linearize(
    base: AffineBlockMatrix,
    quad_terms: Sequence[tuple[Operand, float]],
) -> AffineBlockMatrix:
    """
    Lift ``base + sum(L.T @ L / rho) < 0`` into one larger affine matrix.

    Each factor L (r x base.dim, affine in the variables) adds a block row
    and column::

        [ base   L.T      ]
        [ L     -rho * I  ]

    which is negative definite exactly when the quadratic form is.

    Raises:
        ModelInputError: If a weight is not positive or a factor has the wrong width
    """
    sizes = list(base.sizes)
    blocks = dict(base.blocks)
    for q, (factor, rho) in enumerate(quad_terms):
        if not rho > 0:
            raise ModelInputError(f"Schur weight {q} must be positive, got {rho}")
        L = as_expr(factor)
        if L.shape[1] != base.dim:
            raise ModelInputError(f"Schur factor {q} has {L.shape[1]} columns, expected {base.dim}")
        new = len(sizes)
        r = L.shape[0]
        sizes.append(r)
        for c in range(base.n_blocks):
            piece = (L @ selector(base.sizes, c)).T
            if not piece.is_zero():
                blocks[(c, new)] = piece
        blocks[(new, new)] = as_expr(-float(rho) * np.eye(r))
    return AffineBlockMatrix(sizes, blocks)
