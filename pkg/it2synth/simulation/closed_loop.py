"""Closed-loop integration of the interconnected fuzzy system.

The vector field of subsystem i is::

    dx_i/dt = sum_l w_il (A_il x_i + B_il u_i + D1_il w_i + sum_k Abar_ikl x_k)
    u_i     = sum_j m_ij G_ij x_i
    z_i     = sum_l w_il (C_il x_i + D2_il w_i)

with w_il and m_ij the realised plant and controller grades. Integration is
fixed-step fourth-order Runge-Kutta.
"""

from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Optional, Sequence, Union

import numpy as np
import pandas as pd
from scipy.integrate import trapezoid

from ..errors import CertificationError, DegenerateGradeError, DivergenceError, ModelInputError
from ..fuzzy.model import LargeScaleSystem, controller_grades, plant_grades

Gains = Sequence[Sequence[np.ndarray]]

DISTURBANCE_KINDS = ("zero", "decaying-sinusoid", "tabulated")


@dataclass(frozen=True)
class DisturbanceSignal:
    """
    One subsystem's disturbance.

    ``decaying-sinusoid`` is ``a * exp(-b t) * sin(c t)``; ``tabulated``
    interpolates ``values`` over ``times`` linearly and is zero past the end.
    A scalar signal drives every disturbance channel.
    """

    kind: str = "zero"
    a: float = 0.0
    b: float = 0.0
    c: float = 0.0
    times: tuple[float, ...] = ()
    values: tuple[float, ...] = ()

    def __post_init__(self) -> None:
        if self.kind not in DISTURBANCE_KINDS:
            raise ModelInputError(
                f"disturbance kind must be one of {', '.join(DISTURBANCE_KINDS)}, got {self.kind!r}"
            )
        if not all(np.isfinite([self.a, self.b, self.c])):
            raise ModelInputError("disturbance parameters must be finite")
        if self.kind == "tabulated":
            t = np.asarray(self.times, dtype=float)
            v = np.asarray(self.values, dtype=float)
            if t.ndim != 1 or t.size < 2 or t.shape != v.shape:
                raise ModelInputError("tabulated disturbance needs matching times and values (>= 2 samples)")
            if np.any(np.diff(t) <= 0):
                raise ModelInputError("tabulated disturbance times must increase")
            if not np.all(np.isfinite(v)):
                raise ModelInputError("tabulated disturbance values must be finite")
            object.__setattr__(self, "times", tuple(float(x) for x in t))
            object.__setattr__(self, "values", tuple(float(x) for x in v))

    @classmethod
    def decaying_sinusoid(cls, a: float, b: float, c: float) -> "DisturbanceSignal":
        return cls("decaying-sinusoid", a=float(a), b=float(b), c=float(c))

    @classmethod
    def tabulated(cls, times: Sequence[float], values: Sequence[float]) -> "DisturbanceSignal":
        return cls("tabulated", times=tuple(times), values=tuple(values))

    def __call__(self, t: float) -> float:
        if self.kind == "decaying-sinusoid":
            return float(self.a * np.exp(-self.b * t) * np.sin(self.c * t))
        if self.kind == "tabulated":
            if t < self.times[0] or t > self.times[-1]:
                return 0.0
            return float(np.interp(t, self.times, self.values))
        return 0.0

    def to_dict(self) -> dict[str, Any]:
        if self.kind == "tabulated":
            return {"kind": self.kind, "times": list(self.times), "values": list(self.values)}
        if self.kind == "decaying-sinusoid":
            return {"kind": self.kind, "a": self.a, "b": self.b, "c": self.c}
        return {"kind": "zero"}

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "DisturbanceSignal":
        kind = data.get("kind", "zero")
        if kind == "tabulated":
            return cls.tabulated(data.get("times", ()), data.get("values", ()))
        if kind == "decaying-sinusoid":
            return cls.decaying_sinusoid(data.get("a", 0.0), data.get("b", 0.0), data.get("c", 0.0))
        return cls(kind)


@dataclass(frozen=True)
class DisturbanceSpec:
    """Per-subsystem disturbance signals."""

    signals: tuple[DisturbanceSignal, ...]

    @classmethod
    def zero(cls, n_subsystems: int) -> "DisturbanceSpec":
        return cls(tuple(DisturbanceSignal() for _ in range(n_subsystems)))

    @classmethod
    def from_dicts(cls, items: Sequence[dict[str, Any]]) -> "DisturbanceSpec":
        return cls(tuple(DisturbanceSignal.from_dict(item) for item in items))

    def evaluate(self, t: float, dims: Sequence[int]) -> list[np.ndarray]:
        if len(self.signals) != len(dims):
            raise ModelInputError(f"{len(self.signals)} disturbance signals for {len(dims)} subsystems")
        return [np.full(m, sig(t)) for sig, m in zip(self.signals, dims)]

    def to_dicts(self) -> list[dict[str, Any]]:
        return [s.to_dict() for s in self.signals]


@dataclass
class Trajectory:
    """Sampled states, inputs, outputs and disturbances on a uniform grid."""

    times: np.ndarray
    states: list[np.ndarray]
    inputs: list[np.ndarray] = field(default_factory=list)
    outputs: list[np.ndarray] = field(default_factory=list)
    disturbances: list[np.ndarray] = field(default_factory=list)

    @property
    def N(self) -> int:
        return len(self.states)

    def state_norms(self) -> np.ndarray:
        """Euclidean norm of the stacked state at every sample."""
        stacked = np.hstack(self.states)
        return np.linalg.norm(stacked, axis=1)

    def truncated(self, n_samples: int) -> "Trajectory":
        def cut(chans: list[np.ndarray]) -> list[np.ndarray]:
            return [c[:n_samples] for c in chans]

        return Trajectory(
            times=self.times[:n_samples],
            states=cut(self.states),
            inputs=cut(self.inputs),
            outputs=cut(self.outputs),
            disturbances=cut(self.disturbances),
        )

    def to_frame(self) -> pd.DataFrame:
        """Columns ``t, x{i}_{r}, u{i}_{r}, z{i}_{r}, w{i}_{r}``."""
        data: dict[str, np.ndarray] = {"t": self.times}
        for prefix, chans in (
            ("x", self.states),
            ("u", self.inputs),
            ("z", self.outputs),
            ("w", self.disturbances),
        ):
            for i, arr in enumerate(chans):
                for r in range(arr.shape[1]):
                    data[f"{prefix}{i}_{r}"] = arr[:, r]
        return pd.DataFrame(data)

    @classmethod
    def from_frame(cls, frame: pd.DataFrame) -> "Trajectory":
        """
        Inverse of :meth:`to_frame`.

        Raises:
            CertificationError: If the time column or the states are missing
        """
        if "t" not in frame.columns:
            raise CertificationError("trajectory table has no 't' column")

        def channel(prefix: str) -> list[np.ndarray]:
            found: dict[int, dict[int, str]] = {}
            for col in frame.columns:
                if not col.startswith(prefix) or "_" not in col:
                    continue
                head, _, comp = col[len(prefix) :].partition("_")
                if head.isdigit() and comp.isdigit():
                    found.setdefault(int(head), {})[int(comp)] = col
            out = []
            for i in sorted(found):
                cols = [found[i][r] for r in sorted(found[i])]
                out.append(frame[cols].to_numpy(dtype=float))
            return out

        states = channel("x")
        if not states:
            raise CertificationError("trajectory table has no state columns")
        return cls(
            times=frame["t"].to_numpy(dtype=float),
            states=states,
            inputs=channel("u"),
            outputs=channel("z"),
            disturbances=channel("w"),
        )


def save_trajectory(trajectory: Trajectory, path: Union[str, Path], float_format: str = "%.12g") -> None:
    trajectory.to_frame().to_csv(path, index=False, float_format=float_format)


def load_trajectory(path: Union[str, Path]) -> Trajectory:
    return Trajectory.from_frame(pd.read_csv(path))


def zero_gains(system: LargeScaleSystem) -> list[list[np.ndarray]]:
    """Open-loop gains (all zero)."""
    return [
        [np.zeros((sub.m, sub.n)) for _ in range(system.controllers[sub.index].c)]
        for sub in system.subsystems
    ]


def _check_gains(system: LargeScaleSystem, gains: Gains) -> list[list[np.ndarray]]:
    if len(gains) != system.N:
        raise ModelInputError(f"gains given for {len(gains)} subsystems, system has {system.N}")
    out = []
    for sub in system.subsystems:
        per_rule = [np.atleast_2d(np.asarray(G, dtype=float)) for G in gains[sub.index]]
        c = system.controllers[sub.index].c
        if len(per_rule) != c:
            raise ModelInputError(f"subsystem {sub.index}: {len(per_rule)} gains for {c} controller rules")
        for j, G in enumerate(per_rule):
            if G.shape != (sub.m, sub.n):
                raise ModelInputError(
                    f"gain G[{sub.index},{j}] has shape {G.shape}, expected {(sub.m, sub.n)}"
                )
        out.append(per_rule)
    return out


def _field(
    system: LargeScaleSystem,
    gains: list[list[np.ndarray]],
    xs: Sequence[np.ndarray],
    ws: Sequence[np.ndarray],
) -> tuple[list[np.ndarray], list[np.ndarray], list[np.ndarray]]:
    """(dx, u, z) per subsystem."""
    dxs, us, zs = [], [], []
    for sub in system.subsystems:
        i = sub.index
        x = xs[i]
        try:
            w_plant = plant_grades(sub, x)
            m_ctrl = controller_grades(system.controllers[i], x, sub.n)
        except DegenerateGradeError as e:
            raise DegenerateGradeError(
                f"subsystem {i}: {e.message}",
                details={"subsystem": i, "state": np.asarray(x).tolist()},
            )
        u = sum(m * (G @ x) for m, G in zip(m_ctrl, gains[i]))
        u = np.asarray(u, dtype=float).reshape(sub.m)
        dx = np.zeros(sub.n)
        z = np.zeros(sub.n_z)
        for wl, rule in zip(w_plant, sub.rules):
            if wl == 0.0:
                continue
            local = rule.A @ x + rule.B @ u + rule.D1 @ ws[i]
            for k, Abar in rule.interconnections.items():
                local = local + Abar @ xs[k]
            dx += wl * local
            z += wl * (rule.C @ x + rule.D2 @ ws[i])
        dxs.append(dx)
        us.append(u)
        zs.append(z)
    return dxs, us, zs


def closed_loop_derivative(
    system: LargeScaleSystem,
    gains: Gains,
    x_all: Sequence[Any],
    w_all: Optional[Sequence[Any]] = None,
    t: float = 0.0,
) -> list[np.ndarray]:
    """
    Grade-weighted vector field at one instant.

    Args:
        system: Large-scale IT2 system
        gains: G[i][j], shape (m_i, n_i); zero gains give the open loop
        x_all: Per-subsystem states
        w_all: Per-subsystem disturbances (zero when omitted)
        t: Time (the field is autonomous; kept for integrator signatures)

    Raises:
        DegenerateGradeError: If every firing strength of a subsystem vanishes
    """
    checked = _check_gains(system, gains)
    xs = [np.asarray(x, dtype=float).reshape(sub.n) for x, sub in zip(x_all, system.subsystems)]
    if len(xs) != system.N:
        raise ModelInputError(f"{len(xs)} states for {system.N} subsystems")
    if w_all is None:
        ws = [np.zeros(sub.m_w) for sub in system.subsystems]
    else:
        ws = [np.asarray(w, dtype=float).reshape(sub.m_w) for w, sub in zip(w_all, system.subsystems)]
    return _field(system, checked, xs, ws)[0]


def integrate(
    system: LargeScaleSystem,
    gains: Gains,
    x0: Sequence[Any],
    dist: Optional[DisturbanceSpec] = None,
    T: float = 20.0,
    dt: float = 1e-3,
    blowup: float = 1e8,
) -> Trajectory:
    """
    Fixed-step RK4 integration.

    Args:
        system: Large-scale IT2 system
        gains: Controller gains (see :func:`zero_gains` for the open loop)
        x0: Per-subsystem initial states
        dist: Disturbances (zero when omitted)
        T: Horizon in seconds
        dt: Step size in seconds
        blowup: Bound on the stacked state norm

    Returns:
        Trajectory sampled every ``dt``, outputs and inputs included

    Raises:
        ModelInputError: If ``dt <= 0`` or ``T < dt``
        DivergenceError: If the state norm exceeds ``blowup``; carries the
            partial trajectory
    """
    if not dt > 0 or T < dt:
        raise ModelInputError(f"need dt > 0 and T >= dt, got dt={dt}, T={T}")
    checked = _check_gains(system, gains)
    dims = system.state_dims()
    w_dims = [sub.m_w for sub in system.subsystems]
    dist = dist or DisturbanceSpec.zero(system.N)
    splits = np.cumsum(dims)[:-1]

    if len(x0) != system.N:
        raise ModelInputError(f"{len(x0)} initial states for {system.N} subsystems")
    state = np.concatenate(
        [np.asarray(x, dtype=float).reshape(n) for x, n in zip(x0, dims)]
    )

    def f(t: float, s: np.ndarray) -> np.ndarray:
        dxs, _, _ = _field(system, checked, np.split(s, splits), dist.evaluate(t, w_dims))
        return np.concatenate(dxs)

    n_steps = int(round(T / dt))
    times = np.arange(n_steps + 1) * dt
    X = np.zeros((n_steps + 1, sum(dims)))
    U = [np.zeros((n_steps + 1, sub.m)) for sub in system.subsystems]
    Z = [np.zeros((n_steps + 1, sub.n_z)) for sub in system.subsystems]
    Wd = [np.zeros((n_steps + 1, m)) for m in w_dims]

    def record(k: int, s: np.ndarray) -> None:
        ws = dist.evaluate(times[k], w_dims)  # type: ignore[union-attr]
        _, us, zs = _field(system, checked, np.split(s, splits), ws)
        X[k] = s
        for i in range(system.N):
            U[i][k], Z[i][k], Wd[i][k] = us[i], zs[i], ws[i]

    def pack(n_samples: int) -> Trajectory:
        return Trajectory(
            times=times[:n_samples],
            states=[a[:n_samples] for a in np.split(X, splits, axis=1)],
            inputs=[a[:n_samples] for a in U],
            outputs=[a[:n_samples] for a in Z],
            disturbances=[a[:n_samples] for a in Wd],
        )

    record(0, state)
    for k in range(n_steps):
        t = times[k]
        k1 = f(t, state)
        k2 = f(t + dt / 2, state + dt / 2 * k1)
        k3 = f(t + dt / 2, state + dt / 2 * k2)
        k4 = f(t + dt, state + dt * k3)
        state = state + dt / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
        norm = float(np.linalg.norm(state))
        if not np.isfinite(norm) or norm > blowup:
            raise DivergenceError(
                f"state norm exceeded {blowup:g} at t = {times[k + 1]:.4g} s",
                trajectory=pack(k + 1),
                details={"time": float(times[k + 1]), "blowup": blowup},
            )
        try:
            record(k + 1, state)
        except DegenerateGradeError as e:
            raise DivergenceError(
                f"state left the modeled region at t = {times[k + 1]:.4g} s ({e.message})",
                trajectory=pack(k + 1),
                details={"time": float(times[k + 1]), **e.details},
            )
    return pack(n_steps + 1)


def _energy(chans: Sequence[np.ndarray], times: np.ndarray) -> float:
    if not chans or times.size < 2:
        return 0.0
    sq = np.sum([np.sum(c**2, axis=1) for c in chans], axis=0)
    return float(trapezoid(sq, times))


def attenuation_ratio(trajectory: Trajectory) -> float:
    """
    ``sqrt(int |z|^2 dt / int |w|^2 dt)`` with the trapezoid rule.

    Raises:
        CertificationError: If the disturbance has zero energy
    """
    ew = _energy(trajectory.disturbances, trajectory.times)
    if ew <= 0.0:
        raise CertificationError("disturbance has zero energy; attenuation ratio undefined")
    return float(np.sqrt(_energy(trajectory.outputs, trajectory.times) / ew))


def lyapunov_trace(trajectory: Trajectory, X: Sequence[np.ndarray]) -> np.ndarray:
    """
    ``V(t) = sum_i x_i' X_i^{-1} x_i`` at every sample.

    Raises:
        ModelInputError: If an X_i is singular or mis-sized
    """
    if len(X) != trajectory.N:
        raise ModelInputError(f"{len(X)} Lyapunov matrices for {trajectory.N} subsystems")
    V = np.zeros(trajectory.times.size)
    for xs, Xi in zip(trajectory.states, X):
        try:
            P = np.linalg.inv(np.asarray(Xi, dtype=float))
        except np.linalg.LinAlgError:
            raise ModelInputError("Lyapunov matrix X_i is singular")
        if P.shape != (xs.shape[1], xs.shape[1]):
            raise ModelInputError(f"Lyapunov matrix of shape {P.shape} for states of width {xs.shape[1]}")
        V += np.einsum("ti,ij,tj->t", xs, P, xs)
    return V


def trajectory_metrics(trajectory: Trajectory) -> dict[str, Any]:
    """Final and peak state norms plus output and disturbance energies."""
    norms = trajectory.state_norms()
    ew = _energy(trajectory.disturbances, trajectory.times)
    ez = _energy(trajectory.outputs, trajectory.times)
    return {
        "horizon": float(trajectory.times[-1]) if trajectory.times.size else 0.0,
        "samples": int(trajectory.times.size),
        "final_norm": float(norms[-1]) if norms.size else 0.0,
        "peak_norm": float(np.max(norms)) if norms.size else 0.0,
        "output_energy": ez,
        "disturbance_energy": ew,
        "attenuation_ratio": float(np.sqrt(ez / ew)) if ew > 0 else None,
    }
