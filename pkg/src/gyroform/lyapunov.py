"""Lyapunov functions of the two-particle laws and their sign kernels.

Everything is written on the reduced shape ``(r, x1, x2)`` with
``r = r2 - r1``.  Functions accept stacked inputs (leading axes) so the
sampled inequality checks run vectorized.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .framed import FramedState
from .laws import F_rect, LawKind, LawParams, h_potential
from .lie import SE3, dot3

CONSISTENCY_TOL = 1e-9


class Frames(NamedTuple):
    """Stacked frame columns; a ``FramedState`` works wherever this is accepted."""

    x: np.ndarray
    y: np.ndarray
    z: np.ndarray


class BoundaryError(ValueError):
    """State lies on the boundary of the Lyapunov function's domain (V = +inf)."""


@dataclass(frozen=True)
class ShapeTriple:
    r: np.ndarray
    x1: np.ndarray
    x2: np.ndarray

    def __post_init__(self):
        for name in ("r", "x1", "x2"):
            object.__setattr__(self, name, np.asarray(getattr(self, name), dtype=float))

    @classmethod
    def from_states(cls, s1: FramedState, s2: FramedState) -> "ShapeTriple":
        return cls(s2.r - s1.r, s1.x, s2.x)

    @property
    def distance(self):
        return np.sqrt(dot3(self.r, self.r))

    @property
    def r_unit(self):
        return self.r / self.distance[..., None]

    def projections(self):
        """``(x1.x2, rh.x1, rh.x2)``."""
        ru = self.r_unit
        return dot3(self.x1, self.x2), dot3(ru, self.x1), dot3(ru, self.x2)


def _scalar(a):
    a = np.asarray(a)
    return float(a) if a.ndim == 0 else a


def _finish(arg, h, strict: bool, what: str):
    bad = ~(arg > 0.0)
    if np.any(bad) and strict:
        raise BoundaryError(f"{what}: log argument is not positive")
    with np.errstate(divide="ignore", invalid="ignore"):
        v = np.where(bad, np.inf, -np.log(np.where(bad, 1.0, arg)) + h)
    return _scalar(v)


def _separation(s: ShapeTriple, strict: bool):
    d = s.distance
    zero = ~(d > 0.0)
    if np.any(zero) and strict:
        raise BoundaryError("zero separation")
    return np.where(zero, 1.0, d), zero


def v_rect(s: ShapeTriple, p: LawParams, strict: bool = True):
    """``-ln(1 + x2.x1) + h(|r|)``."""
    d, zero = _separation(s, strict)
    h = h_potential(d, p, LawKind.RECTILINEAR)
    arg = np.where(zero, 0.0, rect_log_argument(s))
    return _finish(arg, h, strict, "v_rect")


def rect_log_argument(s: ShapeTriple):
    """``1 + x2.x1``, evaluated as ``|x1 + x2|^2 / 2``."""
    return _scalar(0.5 * np.sum((s.x1 + s.x2) ** 2, axis=-1))


def circ_log_argument(s: ShapeTriple):
    """``1 - x2.x1 + 2 (rh.x2)(rh.x1)``; nonnegative for unit headings.

    Evaluated as ``|x1 - P x2|^2 / 2`` with ``P = I - 2 rh rh^T`` the
    reflection across the plane normal to the baseline, which keeps full
    relative accuracy near zero.
    """
    ru = s.r_unit
    reflected = s.x2 - 2.0 * dot3(ru, s.x2)[..., None] * ru
    return _scalar(0.5 * np.sum((s.x1 - reflected) ** 2, axis=-1))


def v_circ(s: ShapeTriple, p: LawParams, strict: bool = True):
    """``-ln(1 - x2.x1 + 2 (rh.x2)(rh.x1)) + h_circ(|r|)``."""
    d, zero = _separation(s, strict)
    h = h_potential(d, p, LawKind.CIRCLING)
    with np.errstate(invalid="ignore", divide="ignore"):
        arg = np.where(zero, 0.0, circ_log_argument(s))
    return _finish(arg, h, strict, "v_circ")


def lyapunov_value(s: ShapeTriple, p: LawParams, strict: bool = True):
    if p.kind == LawKind.CIRCLING:
        return v_circ(s, p, strict)
    return v_rect(s, p, strict)


def vdot_rect_analytic(s: ShapeTriple, frames, p: LawParams):
    """Time derivative of ``v_rect`` along the closed-loop rectilinear law.

    ``frames`` is the pair of frames (``FramedState`` or stacked ``Frames``);
    their ``x`` must match the headings in ``s``.  The fourth bracket uses
    ``F(-r, x1, z1, x2)``, the relabeling-symmetric partner of the second.
    """
    f1, f2 = frames
    if np.any(np.abs(f1.x - s.x1) > CONSISTENCY_TOL) or np.any(np.abs(f2.x - s.x2) > CONSISTENCY_TOL):
        raise ValueError("frames do not match the shape triple headings")
    c = dot3(s.x1, s.x2)
    if np.any(1.0 + c <= 0.0) or np.any(s.distance <= 0.0):
        raise BoundaryError("vdot_rect: outside the domain of v_rect")
    ru = s.r_unit
    x1, x2 = s.x1, s.x2
    total = (
        dot3(x1, f2.y) * F_rect(ru, x2, f2.y, x1, p)
        + dot3(x2, f1.y) * F_rect(-ru, x1, f1.y, x2, p)
        + dot3(x1, f2.z) * F_rect(ru, x2, f2.z, x1, p)
        + dot3(x2, f1.z) * F_rect(-ru, x1, f1.z, x2, p)
    )
    return _scalar(-total / (1.0 + c))


def rect_inequality(phi1, phi2, sign: int = 1):
    """Planar form ``sin(d) [sin(d) + sign (sin 2 phi2 - sin 2 phi1) / 2]``, ``d = phi2 - phi1``."""
    phi1 = np.asarray(phi1, dtype=float)
    phi2 = np.asarray(phi2, dtype=float)
    s = np.sin(phi2 - phi1)
    return _scalar(s * (s + sign * 0.5 * (np.sin(2.0 * phi2) - np.sin(2.0 * phi1))))


def rect_inequality_vector(s: ShapeTriple, sign: int = 1):
    """``1 - c^2 + sign (c (a1^2 + a2^2) - 2 a1 a2)`` with ``c = x1.x2``, ``ai = rh.xi``."""
    c, a1, a2 = s.projections()
    return _scalar(1.0 - c * c + sign * (c * (a1 * a1 + a2 * a2) - 2.0 * a1 * a2))


def rect_inequality_frames(s1: FramedState, s2: FramedState, sign: int = 1):
    """Four-term version of ``rect_inequality_vector`` written with the normals.

    Equal to it for any frames; this is the sum whose nonnegativity makes
    ``vdot_rect_analytic <= 0`` when ``mu > eta/2``.
    """
    ru = ShapeTriple.from_states(s1, s2).r_unit
    a1, a2 = dot3(ru, s1.x), dot3(ru, s2.x)
    total = 0.0
    for n2 in (s2.y, s2.z):
        q = dot3(s1.x, n2)
        total = total + q * (0.5 * q - sign * a2 * dot3(ru, n2))
    for n1 in (s1.y, s1.z):
        q = dot3(s2.x, n1)
        total = total + q * (0.5 * q - sign * a1 * dot3(ru, n1))
    return _scalar(total)


def planar_angles(s: ShapeTriple):
    """Angles ``(phi1, phi2)`` with ``x1.x2 = cos(phi2 - phi1)`` and ``rh.xi = sin(phi_i)``.

    Only the part of ``rh`` in the plane of ``x1, x2`` enters; it is
    normalized first.  Also returns the in-plane length of ``rh``
    (``rho``), so that for the vector form
    ``V = (1 - rho^2) sin(phi2-phi1)^2 + rho^2 P(phi1, phi2)``.
    Undefined for ``x1 = +-x2``.
    """
    x1, x2 = s.x1, s.x2
    c = np.clip(dot3(x1, x2), -1.0, 1.0)
    eb = x2 - c[..., None] * x1
    eb = eb / np.sqrt(dot3(eb, eb))[..., None]
    theta = np.arccos(c)
    ru = s.r_unit
    p, q = dot3(ru, x1), dot3(ru, eb)
    rho = np.hypot(p, q)
    gamma = np.arctan2(q, p)
    phi1 = 0.5 * np.pi - gamma
    return _scalar(phi1), _scalar(phi1 + theta), _scalar(rho)


def circ_inequality_vector(s: ShapeTriple, sign: int = -1):
    """``1 - q^2 + sign (c + q (1 - a1^2 - a2^2))`` with ``q = -c + 2 a1 a2``."""
    c, a1, a2 = s.projections()
    q = -c + 2.0 * a1 * a2
    return _scalar(1.0 - q * q + sign * (c + q * (1.0 - a1 * a1 - a2 * a2)))


def _group_parts(g: SE3):
    G = g.matrix()
    return G, float(np.sqrt(G[0, 3] ** 2 + G[1, 3] ** 2 + G[2, 3] ** 2))


def v_rect_group(g: SE3, p: LawParams, strict: bool = True) -> float:
    """``v_rect`` from the shape variable ``g = g1^-1 g2``: ``-ln(1 + g11) + h(r)``."""
    G, r = _group_parts(g)
    if r <= 0.0:
        if strict:
            raise BoundaryError("zero separation")
        return np.inf
    q = G[:3, 0]
    arg = 0.5 * ((1.0 + q[0]) ** 2 + q[1] ** 2 + q[2] ** 2)
    return float(_finish(np.asarray(arg), h_potential(r, p, LawKind.RECTILINEAR), strict, "v_rect_group"))


def v_circ_group(g: SE3, p: LawParams, strict: bool = True) -> float:
    """``-ln(1 - g11 - 2 g14 g^14 / r^2) + h_circ(r)``, ``g^ij`` the entries of ``g^-1``."""
    G, r = _group_parts(g)
    if r <= 0.0:
        if strict:
            raise BoundaryError("zero separation")
        return np.inf
    # g^14 = -q.b with q the first column of the rotation, so the argument
    # equals |e1 - q + 2 (bh.q) bh|^2 / 2, free of cancellation near zero
    q, bh = G[:3, 0], G[:3, 3] / r
    s = -q + 2.0 * (bh @ q) * bh
    s[0] += 1.0
    arg = 0.5 * (s @ s)
    return float(_finish(np.asarray(arg), h_potential(r, p, LawKind.CIRCLING), strict, "v_circ_group"))
