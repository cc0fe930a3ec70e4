"""Unit-speed particles carrying a natural Frenet frame.

A particle is ``(r, x, y, z)``: position plus a right-handed orthonormal
frame whose first axis is the velocity.  The frame evolves as

    r' = x,  x' = u y + v z,  y' = -u x + w z,  z' = -v x - w y

which is ``g' = g xi`` on SE(3) with ``xi = (Omega, e1)`` and
``Omega = (w, -v, u)``.  With ``w = 0`` this is the natural (parallel
transport) frame and ``(u, v)`` are the natural curvatures.

Integration holds the controls constant over each step and applies the
exact SE(3) exponential, so frames stay orthonormal to roundoff.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, NamedTuple, Sequence

import numpy as np

from .lie import (
    FRAME_TOL,
    SE3,
    FrameError,
    Twist,
    exp_so3_and_v,
    matmul3,
    matvec3,
)

DEFAULT_DT = 1e-3
DEFAULT_SAMPLE_EVERY = 10


class IntegrationError(RuntimeError):
    """A feedback law produced a non-finite control or state."""

    def __init__(self, message: str, tick: int):
        super().__init__(f"tick {tick}: {message}")
        self.tick = tick


class ControlTriple(NamedTuple):
    u: float
    v: float
    w: float = 0.0

    def omega(self) -> np.ndarray:
        return np.array([self.w, -self.v, self.u])

    def twist(self) -> Twist:
        return Twist.particle(self.omega())


def controls_to_omega(c):
    """``(..., 3)`` controls ``[u, v, w]`` -> body angular velocity ``(w, -v, u)``."""
    c = np.asarray(c, dtype=float)
    return np.stack([c[..., 2], -c[..., 1], c[..., 0]], axis=-1)


def complete_frame(x, hint=None) -> np.ndarray:
    """Frame matrix with first column ``x``.

    ``y`` is ``hint`` made orthogonal to ``x``; without a hint, the
    lowest-index basis vector not (nearly) parallel to ``x`` is used.
    """
    x = np.asarray(x, dtype=float)
    x = x / np.linalg.norm(x)
    if hint is None:
        for k in range(3):
            e = np.zeros(3)
            e[k] = 1.0
            if abs(x[k]) < 0.9:
                hint = e
                break
    y = np.asarray(hint, dtype=float) - np.dot(hint, x) * x
    ny = np.linalg.norm(y)
    if ny < 1e-9:
        raise FrameError("normal hint is parallel to the tangent")
    y = y / ny
    return np.column_stack([x, y, np.cross(x, y)])


@dataclass(frozen=True, eq=False)
class FramedState:
    r: np.ndarray
    x: np.ndarray
    y: np.ndarray
    z: np.ndarray

    def __post_init__(self):
        for name in ("r", "x", "y", "z"):
            object.__setattr__(self, name, np.asarray(getattr(self, name), dtype=float).reshape(3))

    def __eq__(self, other):
        if not isinstance(other, FramedState):
            return NotImplemented
        return all(np.array_equal(getattr(self, k), getattr(other, k)) for k in "rxyz")

    __hash__ = None

    @classmethod
    def from_heading(cls, r, x, normal_hint=None) -> "FramedState":
        F = complete_frame(x, normal_hint)
        return cls(r, F[:, 0], F[:, 1], F[:, 2])

    @classmethod
    def from_frame(cls, r, frame) -> "FramedState":
        F = np.asarray(frame, dtype=float)
        return cls(r, F[:, 0], F[:, 1], F[:, 2])

    @property
    def frame(self) -> np.ndarray:
        return np.column_stack([self.x, self.y, self.z])

    def check(self, tol: float = FRAME_TOL) -> None:
        F = self.frame
        if not (np.all(np.isfinite(F)) and np.all(np.isfinite(self.r))):
            raise FrameError("state has non-finite entries")
        err = np.max(np.abs(F.T @ F - np.eye(3)))
        if err > tol:
            raise FrameError(f"frame not orthonormal (max |F^T F - I| = {err:.3e})")
        if np.max(np.abs(np.cross(self.x, self.y) - self.z)) > tol:
            raise FrameError("frame is not right-handed (z != x cross y)")


def state_to_group(s: FramedState) -> SE3:
    s.check()
    return SE3(s.frame, s.r)


def group_to_state(g: SE3) -> FramedState:
    return FramedState.from_frame(g.translation, g.rotation)


def advance(r, R, controls, dt: float):
    """One exponential step for arrays of particles.

    ``r`` is ``(..., 3)``, ``R`` is ``(..., 3, 3)`` with columns (x, y, z),
    ``controls`` is ``(..., 3)`` holding ``[u, v, w]``.
    """
    Rexp, V = exp_so3_and_v(dt * controls_to_omega(controls))
    r_new = r + dt * matvec3(R, V[..., :, 0])
    return r_new, matmul3(R, Rexp)


def step(s: FramedState, c: ControlTriple, dt: float) -> FramedState:
    if not dt > 0.0:
        raise ValueError("dt must be positive")
    r, R = advance(s.r, s.frame, np.asarray(c, dtype=float), dt)
    return FramedState.from_frame(r, R)


def curvature_magnitude(c) -> float:
    return float(np.hypot(c[0], c[1]))


@dataclass
class Trajectory:
    """Sampled closed-loop run.

    Arrays are indexed ``[sample, particle, ...]``; ``frames[k, j]`` has
    columns (x, y, z) and ``controls[k, j]`` holds ``[u, v, w]`` as applied
    from that sample onward.
    """

    t: np.ndarray
    positions: np.ndarray
    frames: np.ndarray
    controls: np.ndarray

    @property
    def n_particles(self) -> int:
        return self.positions.shape[1]

    def __len__(self) -> int:
        return len(self.t)

    def state(self, k: int, j: int) -> FramedState:
        return FramedState.from_frame(self.positions[k, j], self.frames[k, j])

    def states(self, k: int) -> list[FramedState]:
        return [self.state(k, j) for j in range(self.n_particles)]

    def window(self, duration: float) -> "Trajectory":
        """Trailing part of the run covering ``duration`` time units."""
        keep = self.t >= self.t[-1] - duration - 1e-12
        return Trajectory(self.t[keep], self.positions[keep], self.frames[keep], self.controls[keep])


Law = Callable[[np.ndarray, np.ndarray], np.ndarray]


def zero_law(r, R):
    return np.zeros(r.shape[:-1] + (3,))


def n_ticks(dt: float, T: float) -> int:
    return int(round(T / dt))


def integrate_arrays(
    r0,
    R0,
    law: Law,
    dt: float,
    T: float,
    sample_every: int = DEFAULT_SAMPLE_EVERY,
    on_tick: Callable[[int, np.ndarray, np.ndarray, np.ndarray], None] | None = None,
):
    """Fixed-step closed loop on stacked particle arrays.

    ``r0`` is ``(..., n, 3)`` and ``R0`` is ``(..., n, 3, 3)``; any leading
    axes are independent runs advanced in lockstep.  ``law(r, R)`` returns
    ``(..., n, 3)`` controls evaluated at the start of the tick and applied
    to every particle simultaneously.  ``on_tick(k, r, R, c)`` sees the state
    and controls at every tick, including the final state (with its
    controls).

    Returns ``(t, positions, frames, controls)`` with the sample axis in
    front.
    """
    if not dt > 0.0:
        raise ValueError("dt must be positive")
    if T < 0.0:
        raise ValueError("T must be non-negative")
    if sample_every < 1:
        raise ValueError("sample_every must be >= 1")
    r = np.array(r0, dtype=float)
    R = np.array(R0, dtype=float)
    N = n_ticks(dt, T)
    ts, rs, Rs, cs = [], [], [], []
    for k in range(N + 1):
        c = np.asarray(law(r, R), dtype=float)
        if not np.all(np.isfinite(c)):
            raise IntegrationError("feedback law returned a non-finite control", k)
        if on_tick is not None:
            on_tick(k, r, R, c)
        if k % sample_every == 0 or k == N:
            ts.append(k * dt)
            rs.append(r)
            Rs.append(R)
            cs.append(c)
        if k == N:
            break
        r, R = advance(r, R, c, dt)
        if not (np.all(np.isfinite(r)) and np.all(np.isfinite(R))):
            raise IntegrationError("state became non-finite", k + 1)
    return np.array(ts), np.stack(rs), np.stack(Rs), np.stack(cs)


def integrate(
    initial: Sequence[FramedState],
    law: Law,
    dt: float = DEFAULT_DT,
    T: float = 1.0,
    sample_every: int = DEFAULT_SAMPLE_EVERY,
) -> Trajectory:
    """Closed-loop run of ``len(initial)`` particles under ``law``.

    Laws that carry a compiled runner (the built-in pairwise laws) use it;
    anything else goes through ``integrate_arrays``.
    """
    if len(initial) < 1:
        raise ValueError("need at least one particle")
    for s in initial:
        s.check()
    r0 = np.stack([s.r for s in initial])
    R0 = np.stack([s.frame for s in initial])
    compiled = getattr(law, "run_compiled", None)
    if compiled is not None and getattr(law, "strict", True):
        if sample_every < 1:
            raise ValueError("sample_every must be >= 1")
        run = compiled(r0, R0, dt, T, sample_every)
        if run.status == 1:
            from .laws import CollisionError

            raise CollisionError(0, 1, run.min_separation)
        if run.status == 2:
            raise IntegrationError("feedback law returned a non-finite control", run.last_tick)
        return Trajectory(run.t, run.positions, run.frames, run.controls)
    t, rs, Rs, cs = integrate_arrays(r0, R0, law, dt, T, sample_every)
    return Trajectory(t, rs, Rs, cs)


def constant_law(controls) -> Law:
    c = np.asarray(controls, dtype=float)

    def law(r, R):
        return np.broadcast_to(c, r.shape[:-1] + (3,)).copy()

    return law


def frame_error(R) -> float:
    """Max-abs deviation of ``R^T R`` from the identity over all frames in ``R``."""
    R = np.asarray(R, dtype=float)
    RtR = matmul3(np.swapaxes(R, -1, -2), R)
    return float(np.max(np.abs(RtR - np.eye(3))))
