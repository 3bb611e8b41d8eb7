"""Extended dissipativity: performance presets, validation and certification.

The supply rate is ``J = z' psi1 z + 2 z' psi2 w + w' psi3 w`` and a run is
extended dissipative when ``int_0^t J ds - z(t)' phi z(t) >= rho`` for every
``t``. Particular weightings give the H-infinity, energy-to-peak,
passivity, very-strict passivity and (Q, S, R) criteria.
"""

from dataclasses import dataclass, field, replace
from typing import Any, Optional, Sequence

import numpy as np
from scipy.integrate import cumulative_trapezoid

from ..errors import AssemblyError, CertificationError, ModelInputError
from ..fuzzy.model import LargeScaleSystem

PRESETS = ("h-infinity", "energy-to-peak", "passivity", "very-strict-passivity", "qsr")

# Symmetry and sign tolerance for the weighting matrices
_TOL = 1e-10


def _sym(value: Any, name: str) -> np.ndarray:
    arr = np.atleast_2d(np.asarray(value, dtype=float))
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
        raise ModelInputError(f"{name} must be square, got shape {arr.shape}")
    return arr


@dataclass(frozen=True)
class PerformanceSpec:
    """Weighting matrices of the extended supply rate."""

    phi: np.ndarray
    psi1: np.ndarray
    psi2: np.ndarray
    psi3: np.ndarray
    rho: float = 0.0
    kind: str = "custom"
    params: dict[str, Any] = field(default_factory=dict, compare=False)

    def __post_init__(self) -> None:
        phi = _sym(self.phi, "phi")
        psi1 = _sym(self.psi1, "psi1")
        psi3 = _sym(self.psi3, "psi3")
        psi2 = np.atleast_2d(np.asarray(self.psi2, dtype=float))
        if phi.shape != psi1.shape:
            raise ModelInputError(f"phi {phi.shape} and psi1 {psi1.shape} must both be n_z x n_z")
        if psi2.shape != (psi1.shape[0], psi3.shape[0]):
            raise ModelInputError(
                f"psi2 must be {psi1.shape[0]} x {psi3.shape[0]}, got shape {psi2.shape}"
            )
        for name, value in (("phi", phi), ("psi1", psi1), ("psi2", psi2), ("psi3", psi3)):
            object.__setattr__(self, name, value)
        object.__setattr__(self, "rho", float(self.rho))

    @property
    def n_z(self) -> int:
        return self.psi1.shape[0]

    @property
    def m_w(self) -> int:
        return self.psi3.shape[0]

    @property
    def gamma(self) -> Optional[float]:
        value = self.params.get("gamma")
        return None if value is None else float(value)

    @property
    def has_peak_term(self) -> bool:
        return bool(np.linalg.norm(self.phi, 2) > 0.0)

    def phi_sqrt(self) -> np.ndarray:
        """Symmetric square root of phi (phi is PSD under the standing assumption)."""
        vals, vecs = np.linalg.eigh(0.5 * (self.phi + self.phi.T))
        return (vecs * np.sqrt(np.clip(vals, 0.0, None))) @ vecs.T

    def psi1_factor(self) -> np.ndarray:
        """
        L with ``L' L = -psi1``; rows for zero eigenvalues are dropped.

        Returns:
            (r, n_z) array, r = 0 when psi1 = 0
        """
        vals, vecs = np.linalg.eigh(-0.5 * (self.psi1 + self.psi1.T))
        keep = vals > _TOL
        return np.sqrt(vals[keep])[:, None] * vecs[:, keep].T

    def with_gamma(self, gamma: float) -> "PerformanceSpec":
        """Same preset at another attenuation level."""
        if self.kind not in ("h-infinity", "energy-to-peak", "passivity"):
            raise AssemblyError(f"preset {self.kind!r} has no gamma parameter")
        return preset(self.kind, n_z=self.n_z, m_w=self.m_w, gamma=gamma)

    def with_rho(self, rho: float) -> "PerformanceSpec":
        return replace(self, rho=float(rho))

    def to_dict(self) -> dict[str, Any]:
        return {
            "kind": self.kind,
            "params": {k: (np.asarray(v).tolist() if isinstance(v, np.ndarray) else v) for k, v in self.params.items()},
            "rho": self.rho,
            "phi": self.phi.tolist(),
            "psi1": self.psi1.tolist(),
            "psi2": self.psi2.tolist(),
            "psi3": self.psi3.tolist(),
        }


def _positive(value: Any, name: str) -> float:
    v = float(value)
    if not v > 0:
        raise ModelInputError(f"{name} must be positive, got {value}")
    return v


def preset(kind: str, n_z: int = 1, m_w: int = 1, **params: Any) -> PerformanceSpec:
    """
    Build one of the standard performance criteria.

    Args:
        kind: One of ``PRESETS``
        n_z: Performance output dimension
        m_w: Disturbance dimension
        **params: ``gamma`` for h-infinity, energy-to-peak and passivity;
            ``epsilon`` and ``sigma`` for very-strict-passivity;
            ``Q``, ``S``, ``R`` and ``alpha`` for qsr

    Raises:
        ModelInputError: On unknown kinds, missing or nonpositive parameters,
            or dimensions the criterion cannot take
    """
    Iz, Iw = np.eye(n_z), np.eye(m_w)
    Zzz, Zzw = np.zeros((n_z, n_z)), np.zeros((n_z, m_w))

    if kind in ("h-infinity", "energy-to-peak", "passivity"):
        if "gamma" not in params:
            raise ModelInputError(f"preset {kind}: parameter gamma required")
        gamma = _positive(params["gamma"], "gamma")
        if kind == "h-infinity":
            return PerformanceSpec(Zzz, -Iz, Zzw, gamma**2 * Iw, 0.0, kind, {"gamma": gamma})
        if kind == "energy-to-peak":
            return PerformanceSpec(Iz, Zzz, Zzw, gamma**2 * Iw, 0.0, kind, {"gamma": gamma})
        if n_z != m_w:
            raise ModelInputError(f"passivity needs n_z = m_w, got {n_z} and {m_w}")
        return PerformanceSpec(Zzz, Zzz, Iz, gamma * Iw, 0.0, kind, {"gamma": gamma})

    if kind == "very-strict-passivity":
        if n_z != m_w:
            raise ModelInputError(f"very-strict-passivity needs n_z = m_w, got {n_z} and {m_w}")
        eps = _positive(params.get("epsilon", 0.0), "epsilon")
        sigma = _positive(params.get("sigma", 0.0), "sigma")
        return PerformanceSpec(
            Zzz, -eps * Iz, Iz, -sigma * Iw, 0.0, kind, {"epsilon": eps, "sigma": sigma}
        )

    if kind == "qsr":
        try:
            Q = _sym(params["Q"], "Q")
            S = np.atleast_2d(np.asarray(params["S"], dtype=float))
            R = _sym(params["R"], "R")
        except KeyError as e:
            raise ModelInputError(f"preset qsr: parameter {e.args[0]} required")
        alpha = _positive(params.get("alpha", 0.0), "alpha")
        return PerformanceSpec(
            np.zeros_like(Q),
            Q,
            S,
            R - alpha * np.eye(R.shape[0]),
            0.0,
            kind,
            {"Q": Q, "S": S, "R": R, "alpha": alpha},
        )

    raise ModelInputError(f"unknown performance preset {kind!r}; expected one of {', '.join(PRESETS)}")


@dataclass
class AssumptionCheck:
    item: int
    description: str
    passed: bool
    detail: str = ""

    def to_dict(self) -> dict[str, Any]:
        return {"item": self.item, "description": self.description, "passed": self.passed, "detail": self.detail}


@dataclass
class Assumption1Report:
    """Itemized check of the standing assumptions on the weighting matrices."""

    checks: list[AssumptionCheck]
    errors: list[str] = field(default_factory=list)
    warnings: list[str] = field(default_factory=list)

    @property
    def is_valid(self) -> bool:
        return not self.errors and all(c.passed for c in self.checks)

    def failed_items(self) -> list[int]:
        return [c.item for c in self.checks if not c.passed]

    def to_dict(self) -> dict[str, Any]:
        return {
            "is_valid": self.is_valid,
            "checks": [c.to_dict() for c in self.checks],
            "errors": list(self.errors),
            "warnings": list(self.warnings),
        }


def validate_assumption1(spec: PerformanceSpec, system: LargeScaleSystem) -> Assumption1Report:
    """
    Check the five conditions against every output feedthrough D2 of the system.

    Report-only: nothing is raised.
    """
    errors: list[str] = []
    d2s = []
    for sub in system.subsystems:
        for l, rule in enumerate(sub.rules):
            if rule.D2.shape != (spec.n_z, spec.m_w):
                errors.append(
                    f"subsystem {sub.index}, rule {l}: D2 is {rule.D2.shape}, "
                    f"performance weights need ({spec.n_z}, {spec.m_w})"
                )
            else:
                d2s.append(((sub.index, l), rule.D2))

    def norm(a: np.ndarray) -> float:
        return float(np.linalg.norm(a, 2)) if a.size else 0.0

    symmetric = all(
        np.allclose(m, m.T, atol=_TOL) for m in (spec.phi, spec.psi1, spec.psi3)
    )
    phi_min = float(np.linalg.eigvalsh(spec.phi)[0])
    psi1_max = float(np.linalg.eigvalsh(spec.psi1)[-1])
    phi_norm = norm(spec.phi)

    d2_phi = [(idx, norm(D2) * phi_norm) for idx, D2 in d2s]
    bad_d2 = [idx for idx, v in d2_phi if v > _TOL]
    cross = (norm(spec.psi1) + norm(spec.psi2)) * phi_norm

    worst_item5 = np.inf
    worst_idx = None
    for idx, D2 in d2s:
        mat = D2.T @ spec.psi1 @ D2 + D2.T @ spec.psi2 + spec.psi2.T @ D2 + spec.psi3
        lam = float(np.linalg.eigvalsh(0.5 * (mat + mat.T))[0])
        if lam < worst_item5:
            worst_item5, worst_idx = lam, idx

    checks = [
        AssumptionCheck(1, "phi, psi1, psi3 symmetric", symmetric),
        AssumptionCheck(
            2,
            "phi >= 0 and psi1 <= 0",
            phi_min >= -_TOL and psi1_max <= _TOL,
            f"lambda_min(phi) = {phi_min:.3e}, lambda_max(psi1) = {psi1_max:.3e}",
        ),
        AssumptionCheck(
            3,
            "||D2|| ||phi|| = 0",
            not bad_d2,
            f"violated at (subsystem, rule) {bad_d2}" if bad_d2 else "",
        ),
        AssumptionCheck(4, "(||psi1|| + ||psi2||) ||phi|| = 0", cross <= _TOL, f"value {cross:.3e}"),
        AssumptionCheck(
            5,
            "D2' psi1 D2 + He(D2' psi2) + psi3 > 0",
            bool(d2s) and worst_item5 > 0.0,
            f"smallest eigenvalue {worst_item5:.3e} at (subsystem, rule) {worst_idx}" if d2s else "no D2",
        ),
    ]
    return Assumption1Report(checks=checks, errors=errors)


def supply_rate(spec: PerformanceSpec, z: Any, w: Any) -> np.ndarray:
    """
    Supply rate ``z' psi1 z + 2 z' psi2 w + w' psi3 w``.

    ``z`` and ``w`` may be single vectors or (T, dim) sample stacks; the
    result is a scalar or a length-T array accordingly.

    Raises:
        ModelInputError: On dimension mismatch
    """
    z = np.asarray(z, dtype=float)
    w = np.asarray(w, dtype=float)
    single = z.ndim <= 1 and w.ndim <= 1
    Z = np.atleast_2d(z.reshape(-1) if z.ndim == 0 else z)
    W = np.atleast_2d(w.reshape(-1) if w.ndim == 0 else w)
    if Z.shape[1] != spec.n_z or W.shape[1] != spec.m_w or Z.shape[0] != W.shape[0]:
        raise ModelInputError(
            f"supply rate needs z of width {spec.n_z} and w of width {spec.m_w}, "
            f"got {np.shape(z)} and {np.shape(w)}"
        )
    J = (
        np.einsum("ti,ij,tj->t", Z, spec.psi1, Z)
        + 2.0 * np.einsum("ti,ij,tj->t", Z, spec.psi2, W)
        + np.einsum("ti,ij,tj->t", W, spec.psi3, W)
    )
    return float(J[0]) if single else J


@dataclass
class CertificationReport:
    """Extended-dissipativity margin of one trajectory."""

    kind: str
    times: np.ndarray
    margin_curve: np.ndarray
    rho_preset: float
    rho_storage: Optional[float] = None

    @property
    def min_margin(self) -> float:
        return float(np.min(self.margin_curve)) if self.margin_curve.size else 0.0

    @property
    def argmin_time(self) -> float:
        return float(self.times[int(np.argmin(self.margin_curve))]) if self.times.size else 0.0

    @property
    def passes_preset(self) -> bool:
        return self.min_margin >= self.rho_preset

    @property
    def passes_storage(self) -> Optional[bool]:
        return None if self.rho_storage is None else self.min_margin >= self.rho_storage

    def to_dict(self, curve_stride: int = 1) -> dict[str, Any]:
        stride = max(1, int(curve_stride))
        return {
            "preset": self.kind,
            "min_margin": self.min_margin,
            "argmin_time": self.argmin_time,
            "rho": {
                "preset": {"value": self.rho_preset, "passed": self.passes_preset},
                "storage": (
                    None
                    if self.rho_storage is None
                    else {"value": self.rho_storage, "passed": self.passes_storage}
                ),
            },
            "margin_curve": {
                "t": self.times[::stride].tolist(),
                "margin": self.margin_curve[::stride].tolist(),
            },
        }


def storage_rho(x0: Sequence[np.ndarray], X: Sequence[np.ndarray]) -> float:
    """``-V(x(0))`` with ``V = sum x_i' X_i^{-1} x_i``."""
    total = 0.0
    for xi, Xi in zip(x0, X):
        xi = np.asarray(xi, dtype=float)
        total += float(xi @ np.linalg.solve(Xi, xi))
    return -total


def certify(
    trajectory: Any,
    spec: PerformanceSpec,
    X: Optional[Sequence[np.ndarray]] = None,
) -> CertificationReport:
    """
    Margin curve ``int_0^t J ds - z(t)' phi z(t)`` over a trajectory.

    The supply rate is summed over subsystems, all sharing ``spec``.

    Args:
        trajectory: Object with ``times`` and per-subsystem ``outputs``,
            ``disturbances`` and ``states`` sample lists
        spec: Performance weights
        X: Optional Lyapunov matrices; enables the ``rho = -V(x(0))`` reading

    Raises:
        CertificationError: If output or disturbance samples are missing or
            the time grid is not uniform
    """
    times = np.asarray(getattr(trajectory, "times", None), dtype=float)
    outputs = getattr(trajectory, "outputs", None)
    disturbances = getattr(trajectory, "disturbances", None)
    if times.ndim != 1 or not outputs or not disturbances:
        raise CertificationError("trajectory lacks time, output or disturbance channels")
    if len(outputs) != len(disturbances):
        raise CertificationError("trajectory has mismatched output and disturbance channels")
    if times.size > 2:
        steps = np.diff(times)
        if not np.allclose(steps, steps[0], rtol=1e-6, atol=1e-12):
            raise CertificationError("certification needs a uniform time grid")

    J = np.zeros(times.size)
    peak = np.zeros(times.size)
    for i, (z, w) in enumerate(zip(outputs, disturbances)):
        z = np.asarray(z, dtype=float)
        w = np.asarray(w, dtype=float)
        if z.shape[0] != times.size or w.shape[0] != times.size:
            raise CertificationError(f"subsystem {i}: channel length differs from the time grid")
        try:
            J += supply_rate(spec, z, w)
        except ModelInputError as e:
            raise CertificationError(f"subsystem {i}: {e.message}")
        peak += np.einsum("ti,ij,tj->t", z, spec.phi, z)

    integral = cumulative_trapezoid(J, times, initial=0.0) if times.size else J
    rho_storage = None
    if X is not None:
        states = getattr(trajectory, "states", None)
        if not states:
            raise CertificationError("storage reading of rho needs the state channels")
        rho_storage = storage_rho([np.asarray(s)[0] for s in states], X)

    return CertificationReport(
        kind=spec.kind,
        times=times,
        margin_curve=integral - peak,
        rho_preset=spec.rho,
        rho_storage=rho_storage,
    )


def jensen_bound(vectors: Sequence[Any], W: Any) -> tuple[float, float]:
    """
    Both sides of ``(sum x)' W (sum x) <= d * sum x' W x`` for d vectors.

    Raises:
        ModelInputError: If W is not symmetric positive semidefinite
    """
    W = _sym(W, "W")
    if not np.allclose(W, W.T, atol=_TOL) or np.linalg.eigvalsh(W)[0] < -_TOL:
        raise ModelInputError("Jensen weight must be symmetric positive semidefinite")
    xs = [np.atleast_1d(np.asarray(v, dtype=float)) for v in vectors]
    if not xs:
        return 0.0, 0.0
    total = np.sum(xs, axis=0)
    lhs = float(total @ W @ total)
    rhs = float(len(xs) * sum(x @ W @ x for x in xs))
    return lhs, rhs


def young_bound(x: Any, y: Any, kappa: float) -> tuple[float, float]:
    """
    Both sides of ``2 x' y <= x' x / kappa + kappa y' y``.

    Raises:
        ModelInputError: If kappa is not positive
    """
    kappa = _positive(kappa, "kappa")
    x = np.atleast_1d(np.asarray(x, dtype=float))
    y = np.atleast_1d(np.asarray(y, dtype=float))
    return float(2.0 * x @ y), float(x @ x / kappa + kappa * y @ y)
