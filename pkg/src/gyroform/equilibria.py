"""Relative equilibria of particles driven by constant SE(3) twists.

Two particles with group states ``g1, g2`` and twists ``xi1, xi2`` have
shape ``g = g1^-1 g2`` obeying ``g' = g xi`` with
``xi = xi2 - Ad_{g^-1} xi1``.  An equilibrium shape satisfies
``g xi2 = xi1 g``.  With ``Omega_j = (w, a sin psi_j, a cos psi_j)`` the
solutions are

    g = (R_psi1^T) (R_phi^T) (R_theta | b~) (R_phi) (R_psi2),
    b~ = (a sin(theta), a (1 - cos(theta)), (a^2 + w^2) b3) / (a^2 + w^2),

where ``cos(phi) = a/k``, ``sin(phi) = w/k``, ``k = sqrt(a^2 + w^2)``;
``theta`` and ``b3`` are free.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
import math
from typing import Sequence

import numpy as np

from .framed import ControlTriple
from .lie import (
    ALGEBRA_TOL,
    E3,
    SE3,
    Twist,
    adjoint,
    rot_x,
    rot_y_neg,
    rot_z,
    se3_compose,
    se3_inverse,
)

CLASSIFY_TOL = 1e-12


class FormationClass(str, Enum):
    RECTILINEAR = "Rectilinear"
    CIRCLING = "Circling"
    COLLINEAR = "Collinear"
    HELICAL = "Helical"


@dataclass(frozen=True)
class EquilibriumSpec:
    w: float
    a: float
    psi1: float = 0.0
    psi2: float = 0.0
    theta: float = 0.0
    b3: float = 0.0

    def __post_init__(self):
        if not self.a >= 0.0:
            raise ValueError(f"curvature magnitude a must be >= 0, got {self.a}")
        for name in ("w", "a", "psi1", "psi2", "theta", "b3"):
            if not math.isfinite(getattr(self, name)):
                raise ValueError(f"{name} must be finite")

    @property
    def degenerate(self) -> bool:
        return self.w == 0.0 and self.a == 0.0

    def twists(self) -> tuple[Twist, Twist]:
        return (
            Twist.particle(omega_from_polar(self.w, self.a, self.psi1)),
            Twist.particle(omega_from_polar(self.w, self.a, self.psi2)),
        )


def omega_from_polar(w: float, a: float, psi: float) -> np.ndarray:
    if a < 0.0:
        raise ValueError("a must be >= 0")
    return np.array([w, a * math.sin(psi), a * math.cos(psi)])


def controls_from_omega(omega) -> ControlTriple:
    """Inverse of ``Omega = (w, -v, u)``."""
    return ControlTriple(float(omega[2]), float(-omega[1]), float(omega[0]))


def shape_velocity(g: SE3, xi1: Twist, xi2: Twist) -> Twist:
    """Body velocity ``xi2 - Ad_{g^-1} xi1`` of the shape ``g = g1^-1 g2``."""
    return xi2 - adjoint(se3_inverse(g), xi1)


def is_shape_equilibrium(g: SE3, xi1: Twist, xi2: Twist, tol: float = ALGEBRA_TOL):
    """``(ok, residual)`` with residual the Frobenius norm of ``g xi2^ - xi1^ g``."""
    if not tol > 0.0:
        raise ValueError("tol must be positive")
    G = g.matrix()
    residual = float(np.linalg.norm(G @ xi2.matrix() - xi1.matrix() @ G))
    return residual <= tol, residual


def _rot(R) -> SE3:
    return SE3(R, np.zeros(3))


def tilt_angle(w: float, a: float) -> float:
    """Angle with ``cos = a/k``, ``sin = w/k``."""
    return math.atan2(w, a)


def b_tilde(w: float, a: float, theta: float, b3: float) -> np.ndarray:
    k2 = a * a + w * w
    return np.array([a / k2 * math.sin(theta), a / k2 * (1.0 - math.cos(theta)), b3])


def equilibrium_family(spec: EquilibriumSpec, offset=None) -> SE3:
    """Equilibrium shape for the twists of ``spec``.

    For ``w = a = 0`` every shape with ``Q e1 = e1`` is an equilibrium; the
    result is then a rotation about e1 by ``spec.theta`` with translation
    ``offset`` (default ``(0, 0, spec.b3)``).  ``offset`` is ignored
    otherwise.
    """
    if spec.degenerate:
        b = np.array([0.0, 0.0, spec.b3]) if offset is None else np.asarray(offset, dtype=float)
        return SE3(rot_x(spec.theta), b)
    phi = tilt_angle(spec.w, spec.a)
    Rphi = rot_y_neg(phi)
    middle = SE3(rot_z(spec.theta), b_tilde(spec.w, spec.a, spec.theta, spec.b3))
    g = _rot(rot_x(spec.psi1).T)
    for factor in (_rot(Rphi.T), middle, _rot(Rphi), _rot(rot_x(spec.psi2))):
        g = se3_compose(g, factor)
    return g


def gauge_family(g_tilde: SE3, psi1: float, psi2: float) -> SE3:
    """``(R_psi1^T | 0) g_tilde (R_psi2 | 0)``: same trajectories, rotated normals."""
    return se3_compose(se3_compose(_rot(rot_x(psi1).T), g_tilde), _rot(rot_x(psi2)))


def classify(w: float, a: float, tol: float = CLASSIFY_TOL) -> FormationClass:
    if a < 0.0:
        raise ValueError("a must be >= 0")
    w_zero = abs(w) <= tol
    a_zero = a <= tol
    if w_zero and a_zero:
        return FormationClass.RECTILINEAR
    if w_zero:
        return FormationClass.CIRCLING
    if a_zero:
        return FormationClass.COLLINEAR
    return FormationClass.HELICAL


@dataclass(frozen=True)
class HelixGeometry:
    radius: float
    pitch_rate: float
    axis: np.ndarray


def helix_geometry(w: float, a: float, psi: float = 0.0) -> HelixGeometry:
    """Radius, axial speed and body-frame axis of the constant-twist path.

    The axis is ``Omega / |Omega|``; the unit velocity splits into
    ``w/k`` along it and ``a/k`` around it, turning at rate ``k``.
    """
    k2 = a * a + w * w
    if k2 == 0.0:
        raise ValueError("rectilinear motion (w = a = 0) has no helix axis")
    k = math.sqrt(k2)
    axis = rot_x(psi).T @ rot_y_neg(tilt_angle(w, a)).T @ E3
    return HelixGeometry(a / k2, w / k, axis)


def reduce_shapes(groups: Sequence[SE3]) -> list[SE3]:
    """Shapes ``g1^-1 gj`` for ``j = 2..n``."""
    if len(groups) < 2:
        raise ValueError("need at least two group elements")
    inv1 = se3_inverse(groups[0])
    return [se3_compose(inv1, g) for g in groups[1:]]


def equilibrium_residuals(spec: EquilibriumSpec, g: SE3 | None = None) -> dict[str, float]:
    """Block identities an equilibrium must satisfy, as max-abs residuals.

    ``rotation``: ``Omega1 - Q Omega2``; ``translation``:
    ``Q e1 - (Omega1 x b + e1)``; ``twist``: ``w1 - w2`` and
    ``|(u1, v1)| - |(u2, v2)|`` recovered from the twists.
    """
    if g is None:
        g = equilibrium_family(spec)
    xi1, xi2 = spec.twists()
    Q, b = g.rotation, g.translation
    e1 = np.array([1.0, 0.0, 0.0])
    c1 = controls_from_omega(xi1.omega)
    c2 = controls_from_omega(xi2.omega)
    return {
        "rotation": float(np.max(np.abs(xi1.omega - Q @ xi2.omega))),
        "translation": float(np.max(np.abs(Q @ e1 - (np.cross(xi1.omega, b) + e1)))),
        "twist": max(abs(c1.w - c2.w), abs(math.hypot(c1.u, c1.v) - math.hypot(c2.u, c2.v))),
    }
