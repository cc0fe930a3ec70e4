"""Trajectory CSV, run-report JSON and SVG projection plots."""

from __future__ import annotations

import json
import math
from pathlib import Path

import numpy as np

from .framed import Trajectory
from .harness import RunReport, TerminalClass

CSV_HEADER = "t,id,rx,ry,rz,xx,xy,xz,yx,yy,yz,zx,zy,zz,u,v,w"
CANVAS = 800
MARGIN = 0.05
COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf")

REPORT_KEYS = (
    ("converged", "converged"),
    ("terminalClass", "terminal_class"),
    ("finalSeparation", "final_separation"),
    ("minSeparation", "min_separation"),
    ("maxLyapunovIncrease", "max_lyapunov_increase"),
    ("alignmentMetric", "alignment_metric"),
    ("wallTime", "wall_time"),
)


def _write_text(path, text: str) -> None:
    try:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    except OSError as exc:
        raise OSError(exc.errno, f"cannot write {path}: {exc.strerror}") from None


def _g17(x: float) -> str:
    return format(float(x), ".17g")


def trajectory_csv(traj: Trajectory) -> str:
    """CSV text: one row per particle per sample, particle ids from 1."""
    rows = [CSV_HEADER]
    for k in range(len(traj)):
        t = _g17(traj.t[k])
        for j in range(traj.n_particles):
            F = traj.frames[k, j]
            vals = [*traj.positions[k, j], *F[:, 0], *F[:, 1], *F[:, 2], *traj.controls[k, j]]
            rows.append(",".join([t, str(j + 1)] + [_g17(v) for v in vals]))
    return "\n".join(rows) + "\n"


def write_trajectory_csv(traj: Trajectory, path) -> None:
    _write_text(path, trajectory_csv(traj))


def read_trajectory_csv(path) -> Trajectory:
    """Inverse of ``write_trajectory_csv``."""
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    n = int(data[:, 1].max())
    K = len(data) // n
    data = data.reshape(K, n, 17)
    frames = np.stack([data[..., 5:8], data[..., 8:11], data[..., 11:14]], axis=-1)
    return Trajectory(data[:, 0, 0].copy(), data[..., 2:5].copy(), frames, data[..., 14:17].copy())


def _json_value(v):
    if isinstance(v, TerminalClass):
        return v.value
    if isinstance(v, (bool, np.bool_)):
        return bool(v)
    v = float(v)
    return v if math.isfinite(v) else None


def report_dict(report: RunReport) -> dict:
    """Flat mapping in a fixed key order; non-finite numbers become ``None``."""
    return {name: _json_value(getattr(report, attr)) for name, attr in REPORT_KEYS}


def write_report_json(report: RunReport, path) -> None:
    _write_text(path, json.dumps(report_dict(report), indent=2) + "\n")


def report_from_dict(d: dict) -> RunReport:
    kwargs = {}
    for name, attr in REPORT_KEYS:
        v = d[name]
        if attr == "converged":
            kwargs[attr] = bool(v)
        elif attr == "terminal_class":
            kwargs[attr] = TerminalClass(v)
        else:
            kwargs[attr] = math.nan if v is None else float(v)
    return RunReport(**kwargs)


def read_report_json(path) -> RunReport:
    with open(path, encoding="utf-8") as fh:
        return report_from_dict(json.load(fh))


def formation_normal(traj: Trajectory) -> np.ndarray:
    """Normal of the plane the run ends in.

    For a pair, the plane of the final heading and baseline; otherwise (or
    when those are parallel) the least-variance direction of all positions.
    """
    if traj.n_particles == 2:
        x = traj.frames[-1, 0, :, 0]
        b = traj.positions[-1, 1] - traj.positions[-1, 0]
        nb = np.linalg.norm(b)
        if nb > 0.0:
            n = np.cross(x, b / nb)
            if np.linalg.norm(n) > 1e-6:
                return n / np.linalg.norm(n)
    P = traj.positions.reshape(-1, 3)
    if len(P) >= 3:
        _, s, Vt = np.linalg.svd(P - P.mean(axis=0))
        if s[1] > 1e-12:
            return Vt[2]
    return np.array([0.0, 0.0, 1.0])


def projection_basis(plane, traj: Trajectory | None = None) -> np.ndarray:
    """Rows ``(e_h, e_v)`` spanning the viewing plane."""
    named = {"xy": (0, 1), "xz": (0, 2), "yz": (1, 2)}
    if isinstance(plane, str) and plane in named:
        i, j = named[plane]
        return np.eye(3)[[i, j]]
    if isinstance(plane, str) and plane == "auto":
        if traj is None:
            raise ValueError("auto plane needs a trajectory")
        n = formation_normal(traj)
    else:
        if isinstance(plane, str):
            plane = [float(p) for p in plane.replace(",", " ").split()]
        n = np.asarray(plane, dtype=float)
        if n.shape != (3,) or not np.linalg.norm(n) > 0.0:
            raise ValueError("custom plane normal must be a nonzero 3-vector")
        n = n / np.linalg.norm(n)
    # Horizontal axis: the world axis least aligned with n, made orthogonal to it.
    e = np.eye(3)[int(np.argmin(np.abs(n)))]
    eh = e - np.dot(e, n) * n
    eh = eh / np.linalg.norm(eh)
    return np.stack([eh, np.cross(n, eh)])


def _arrow(tip, direction, size):
    d = direction / np.linalg.norm(direction)
    side = np.array([-d[1], d[0]])
    base = tip - size * d
    return [tip, base + 0.5 * size * side, base - 0.5 * size * side]


def svg_document(traj: Trajectory, plane="xy") -> str:
    if len(traj) == 0 or traj.n_particles == 0:
        raise ValueError("empty trajectory")
    B = projection_basis(plane, traj)
    P = traj.positions @ B.T  # (K, n, 2)
    H = traj.frames[..., 0] @ B.T  # projected headings
    lo, hi = P.reshape(-1, 2).min(axis=0), P.reshape(-1, 2).max(axis=0)
    # Equal scale on both axes, data centered, 5% margin on the longer side.
    span = max(float(np.max(hi - lo)), 1e-12) * (1.0 + 2.0 * MARGIN)
    lo = 0.5 * (lo + hi) - 0.5 * span
    scale = CANVAS / span

    def to_px(q):
        return np.column_stack([(q[:, 0] - lo[0]) * scale, CANVAS - (q[:, 1] - lo[1]) * scale])

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{CANVAS}" height="{CANVAS}" '
        f'viewBox="0 0 {CANVAS} {CANVAS}">',
        f'<rect width="{CANVAS}" height="{CANVAS}" fill="white"/>',
    ]
    for j in range(traj.n_particles):
        color = COLORS[j % len(COLORS)]
        px = to_px(P[:, j])
        pts = " ".join(f"{x:.2f},{y:.2f}" for x, y in px)
        out.append(f'<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{pts}"/>')
        h = H[-1, j] * np.array([1.0, -1.0])
        if np.linalg.norm(h) > 1e-9:
            tri = _arrow(px[-1], h, 14.0)
            pts = " ".join(f"{x:.2f},{y:.2f}" for x, y in tri)
            out.append(f'<polygon fill="{color}" points="{pts}"/>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def plot_svg(traj: Trajectory, plane, path) -> None:
    """Orthographic projection: one polyline per particle, arrowhead on the final heading.

    ``plane`` is ``"xy"``, ``"xz"``, ``"yz"``, ``"auto"`` (formation plane)
    or a normal vector.
    """
    _write_text(path, svg_document(traj, plane))


def write_outputs(traj: Trajectory, report: RunReport, output, directory=None) -> list[Path]:
    """Write the files requested by an ``OutputSpec``; returns their paths."""
    d = Path(directory if directory is not None else output.directory)
    d.mkdir(parents=True, exist_ok=True)
    written = []
    if output.csv:
        written.append(d / "trajectory.csv")
        write_trajectory_csv(traj, written[-1])
    if output.json:
        written.append(d / "report.json")
        write_report_json(report, written[-1])
    if output.svg:
        written.append(d / "trajectory.svg")
        plot_svg(traj, output.plane, written[-1])
    return written
