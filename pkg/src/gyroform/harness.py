"""Scenario runs, terminal classification and parameter sweeps."""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from enum import Enum
import itertools
import math
import time
from typing import Mapping, Sequence

import numpy as np

from ._fast import COLLIDED, NONFINITE
from .framed import (
    DEFAULT_DT,
    DEFAULT_SAMPLE_EVERY,
    FramedState,
    IntegrationError,
    Trajectory,
    complete_frame,
)
from .laws import LawKind, LawParams, pairwise_law
from .lie import dot3
from .lyapunov import ShapeTriple, circ_log_argument, lyapunov_value, rect_log_argument

DEFAULT_TOL = 1e-3
DEFAULT_WINDOW = 5.0
MIN_START_SEPARATION = 0.1  # in units of r0
MIN_LOG_ARGUMENT = 1e-3
MIN_WINDOW_SAMPLES = 10


class TerminalClass(str, Enum):
    PERPENDICULAR_BASELINE = "PerpendicularBaseline"
    LEADER_FOLLOWER = "Leader-Follower"
    CIRCLING_DIAMETER = "CirclingDiameter"
    NONE = "None"


@dataclass(frozen=True)
class OutputSpec:
    directory: str = "out"
    csv: bool = True
    json: bool = True
    svg: bool = True
    plane: str = "auto"


@dataclass(frozen=True)
class Scenario:
    n: int = 2
    law: LawParams = field(default_factory=LawParams)
    dt: float = DEFAULT_DT
    T: float = 100.0
    seed: int = 0
    init: tuple[FramedState, ...] | None = None
    sample_every: int = DEFAULT_SAMPLE_EVERY
    box: float = 4.0
    tol: float = DEFAULT_TOL
    window: float = DEFAULT_WINDOW
    monitor: bool = True
    output: OutputSpec = field(default_factory=OutputSpec)

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("n must be >= 1")
        if not self.dt > 0.0:
            raise ValueError("dt must be positive")
        if not self.T >= 0.0:
            raise ValueError("T must be non-negative")
        if self.sample_every < 1:
            raise ValueError("sample_every must be >= 1")
        if not (self.box > 0.0 and self.tol > 0.0 and self.window > 0.0):
            raise ValueError("box, tol and window must be positive")
        if self.init is not None:
            object.__setattr__(self, "init", tuple(self.init))
            if len(self.init) != self.n:
                raise ValueError(f"init lists {len(self.init)} particles but n = {self.n}")

    def with_(self, **changes) -> "Scenario":
        return replace(self, **changes)

    def initial_states(self) -> list[FramedState]:
        if self.init is not None:
            for s in self.init:
                s.check()
            return list(self.init)
        return random_initial_states(self.n, self.law, self.seed, self.box)


@dataclass
class RunReport:
    converged: bool
    terminal_class: TerminalClass
    final_separation: float
    min_separation: float
    max_lyapunov_increase: float
    alignment_metric: float
    wall_time: float

    def numeric_fields(self) -> tuple:
        """Everything except wall time (which is not reproducible)."""
        return (
            self.converged,
            self.terminal_class,
            self.final_separation,
            self.min_separation,
            self.max_lyapunov_increase,
            self.alignment_metric,
        )


def _random_unit(rng) -> np.ndarray:
    while True:
        v = rng.standard_normal(3)
        n = np.linalg.norm(v)
        if n > 1e-6:
            return v / n


def random_initial_states(n: int, p: LawParams, seed: int, box: float = 4.0) -> list[FramedState]:
    """Positions uniform in a cube of side ``box * r0``, headings uniform on the sphere.

    Rejects draws with any pair closer than ``0.1 r0`` and, for two
    particles, draws on or near the boundary of the Lyapunov domain (log
    argument below ``MIN_LOG_ARGUMENT``).
    """
    rng = np.random.default_rng(seed)
    side = box * p.r0
    for _ in range(100_000):
        r = rng.uniform(-0.5 * side, 0.5 * side, size=(n, 3))
        frames = [complete_frame(_random_unit(rng), _random_unit(rng)) for _ in range(n)]
        if n >= 2:
            d = np.linalg.norm(r[:, None, :] - r[None, :, :], axis=-1)
            if np.min(d[np.triu_indices(n, 1)]) < MIN_START_SEPARATION * p.r0:
                continue
        if n == 2 and p.kind != LawKind.NONE:
            s = ShapeTriple(r[1] - r[0], frames[0][:, 0], frames[1][:, 0])
            if p.kind == LawKind.CIRCLING:
                arg = circ_log_argument(s)
            else:
                arg = rect_log_argument(s)
            if arg < MIN_LOG_ARGUMENT:
                continue
        return [FramedState.from_frame(r[j], frames[j]) for j in range(n)]
    raise RuntimeError("could not draw a valid initial configuration")


def shape_series(traj: Trajectory) -> ShapeTriple:
    """Per-sample ``(r2 - r1, x1, x2)`` of a two-particle trajectory."""
    if traj.n_particles != 2:
        raise ValueError("shape series needs exactly two particles")
    return ShapeTriple(
        traj.positions[:, 1] - traj.positions[:, 0],
        traj.frames[:, 0, :, 0],
        traj.frames[:, 1, :, 0],
    )


def classify_terminal(tail: Trajectory, law: LawParams, tol: float = DEFAULT_TOL) -> TerminalClass:
    """Which equilibrium set the trailing window sits in, if any.

    Every sample of the window must satisfy the set's conditions.
    """
    if len(tail) < MIN_WINDOW_SAMPLES:
        raise ValueError(f"window needs at least {MIN_WINDOW_SAMPLES} samples")
    s = shape_series(tail)
    d = s.distance
    if np.any(d <= 0.0):
        return TerminalClass.NONE
    c, a1, _ = s.projections()
    ru = s.r_unit
    f = law.alpha * (1.0 - (law.r0 / d) ** 2)
    aligned = np.max(1.0 - c) <= tol
    if aligned and np.max(np.abs(a1)) <= tol and np.max(np.abs(f)) <= tol:
        return TerminalClass.PERPENDICULAR_BASELINE
    if aligned:
        lead = np.sqrt(dot3(s.x1 - ru, s.x1 - ru))
        trail = np.sqrt(dot3(s.x1 + ru, s.x1 + ru))
        if np.max(lead) <= tol or np.max(trail) <= tol:
            return TerminalClass.LEADER_FOLLOWER
    scale = max(law.alpha, 1.0)
    if (
        np.max(1.0 + c) <= tol
        and np.max(np.abs(a1)) <= tol
        and np.max(np.abs(f - 2.0 / d)) <= tol * scale
    ):
        return TerminalClass.CIRCLING_DIAMETER
    return TerminalClass.NONE


def lyapunov_monitor(traj: Trajectory, law: LawParams):
    """Lyapunov value per sample and the largest sample-to-sample increase.

    Boundary states give ``+inf`` entries.
    """
    series = np.asarray(lyapunov_value(shape_series(traj), law, strict=False), dtype=float)
    series = np.atleast_1d(series)
    if len(series) < 2:
        return series, 0.0
    with np.errstate(invalid="ignore"):
        diffs = np.diff(series)
    diffs = np.where(np.isnan(diffs), np.inf, diffs)
    return series, float(np.max(diffs))


def alignment_metric(frames_at_sample) -> float:
    """Mean over pairs of ``1 - x_i . x_j``; zero for a single particle."""
    x = np.asarray(frames_at_sample)[:, :, 0]
    n = len(x)
    if n < 2:
        return 0.0
    i, j = np.triu_indices(n, 1)
    return float(np.mean(1.0 - dot3(x[i], x[j])))


def min_pair_distance(positions) -> float:
    P = np.asarray(positions)
    if len(P) < 2:
        return math.nan
    i, j = np.triu_indices(len(P), 1)
    return float(np.min(np.linalg.norm(P[i] - P[j], axis=-1)))


def run_scenario(sc: Scenario) -> tuple[Trajectory, RunReport]:
    """Integrate a scenario and summarize it.

    Two particles use the two-particle law, three or more the averaged
    n-particle law.  A collision stops the run early and is reported as not
    converged; a non-finite control raises ``IntegrationError``.
    """
    start = time.perf_counter()
    states = sc.initial_states()
    r0 = np.stack([s.r for s in states])
    R0 = np.stack([s.frame for s in states])
    law = pairwise_law(sc.law, average=sc.n > 2, strict=False)
    monitor = sc.monitor and sc.n == 2 and sc.law.kind != LawKind.NONE
    run = law.run_compiled(r0, R0, sc.dt, sc.T, sc.sample_every, monitor=monitor)
    if run.status == NONFINITE:
        raise IntegrationError("feedback law returned a non-finite control", run.last_tick)
    traj = Trajectory(run.t, run.positions, run.frames, run.controls)
    collided = run.status == COLLIDED

    terminal = TerminalClass.NONE
    if sc.n == 2 and sc.law.kind != LawKind.NONE and not collided:
        tail = traj.window(sc.window)
        if len(tail) >= MIN_WINDOW_SAMPLES:
            terminal = classify_terminal(tail, sc.law, sc.tol)
    report = RunReport(
        converged=terminal != TerminalClass.NONE,
        terminal_class=terminal,
        final_separation=min_pair_distance(traj.positions[-1]),
        min_separation=run.min_separation if sc.n >= 2 else math.nan,
        max_lyapunov_increase=run.max_increase if monitor else math.nan,
        alignment_metric=alignment_metric(traj.frames[-1]),
        wall_time=time.perf_counter() - start,
    )
    return traj, report


@dataclass
class SweepRow:
    index: int
    params: dict
    seed: int
    report: RunReport | None
    error: str | None = None


@dataclass
class SweepResult:
    rows: list[SweepRow]

    def fractions(self) -> dict[str, float]:
        """Share of rows ending in each terminal class (failed rows count as ``None``)."""
        total = len(self.rows)
        counts = {c.value: 0 for c in TerminalClass}
        for row in self.rows:
            key = row.report.terminal_class.value if row.report else TerminalClass.NONE.value
            counts[key] += 1
        return {k: v / total for k, v in counts.items()} if total else counts

    def converged_fraction(self) -> float:
        if not self.rows:
            return 0.0
        return sum(bool(r.report and r.report.converged) for r in self.rows) / len(self.rows)


LAW_FIELDS = {"alpha", "r0", "mu", "eta", "kind", "sign"}
SCENARIO_FIELDS = {"n", "dt", "T", "sample_every", "box", "tol", "window"}


def apply_overrides(base: Scenario, overrides: Mapping[str, object], seed: int) -> Scenario:
    law_changes = {k: v for k, v in overrides.items() if k in LAW_FIELDS}
    sc_changes = {k: v for k, v in overrides.items() if k in SCENARIO_FIELDS}
    unknown = set(overrides) - LAW_FIELDS - SCENARIO_FIELDS
    if unknown:
        raise ValueError(f"unknown sweep keys: {sorted(unknown)}")
    law = replace(base.law, **law_changes)
    return replace(base, law=law, seed=seed, init=None, **sc_changes)


def _sweep_cell(args):
    index, base, overrides, seed = args
    try:
        sc = apply_overrides(base, overrides, seed)
        _, report = run_scenario(sc)
        return SweepRow(index, dict(overrides), seed, report)
    except Exception as exc:  # noqa: BLE001 - a failed cell must not stop the sweep
        return SweepRow(index, dict(overrides), seed, None, f"{type(exc).__name__}: {exc}")


def sweep_cells(grid: Mapping[str, Sequence], seeds: Sequence[int]):
    keys = list(grid)
    for values in itertools.product(*(grid[k] for k in keys)):
        for seed in seeds:
            yield dict(zip(keys, values)), seed


def sweep(
    base: Scenario,
    grid: Mapping[str, Sequence],
    seeds: Sequence[int],
    workers: int = 1,
) -> SweepResult:
    """Run every (grid point, seed) cell; rows come back in cell order."""
    jobs = [(i, base, ov, seed) for i, (ov, seed) in enumerate(sweep_cells(grid, seeds))]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(_sweep_cell, jobs))
    else:
        rows = [_sweep_cell(job) for job in jobs]
    rows.sort(key=lambda row: row.index)
    return SweepResult(rows)


@dataclass(frozen=True)
class CircleFit:
    center: np.ndarray
    normal: np.ndarray
    radius: float
    radial_deviation: float
    plane_deviation: float


def fit_common_circle(points) -> CircleFit:
    """Least-squares circle through 3D points.

    Plane from the SVD of the centered points, then an algebraic circle fit
    in that plane.  Deviations are maxima relative to the radius.
    """
    P = np.asarray(points, dtype=float)
    if len(P) < 3:
        raise ValueError("need at least three points")
    mean = P.mean(axis=0)
    _, _, Vt = np.linalg.svd(P - mean)
    normal = Vt[2]
    Q = (P - mean) @ Vt[:2].T
    A = np.column_stack([2.0 * Q, np.ones(len(Q))])
    sol = np.linalg.lstsq(A, (Q**2).sum(axis=1), rcond=None)[0]
    c2 = sol[:2]
    radius = float(np.sqrt(sol[2] + c2 @ c2))
    radial = np.abs(np.linalg.norm(Q - c2, axis=1) - radius) / radius
    plane = np.abs((P - mean) @ normal) / radius
    return CircleFit(mean + c2 @ Vt[:2], normal, radius, float(radial.max()), float(plane.max()))
