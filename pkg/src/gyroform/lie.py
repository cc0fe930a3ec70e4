"""SO(3) / SE(3) kernel.

Rotations are plain 3x3 arrays, translations 3-vectors.  The low-level
helpers (``dot3``, ``matmul3``, ``matvec3``, ``exp_coeffs``) broadcast over
leading axes and are written as explicit elementwise sums so that a batched
evaluation gives bit-identical results to the unbatched one.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

# Shared tolerances: algebraic identities and frame validity.
ALGEBRA_TOL = 1e-12
FRAME_TOL = 1e-9
SMALL_ANGLE = 1e-6
SERIES_ANGLE = 0.1

E1 = np.array([1.0, 0.0, 0.0])
E2 = np.array([0.0, 1.0, 0.0])
E3 = np.array([0.0, 0.0, 1.0])


class FrameError(ValueError):
    """Raised when a frame is not (close to) a right-handed orthonormal triad."""


def dot3(a, b):
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    return a[..., 0] * b[..., 0] + a[..., 1] * b[..., 1] + a[..., 2] * b[..., 2]


def cross3(a, b):
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    return np.stack(
        [
            a[..., 1] * b[..., 2] - a[..., 2] * b[..., 1],
            a[..., 2] * b[..., 0] - a[..., 0] * b[..., 2],
            a[..., 0] * b[..., 1] - a[..., 1] * b[..., 0],
        ],
        axis=-1,
    )


def matvec3(A, v):
    A = np.asarray(A, dtype=float)
    v = np.asarray(v, dtype=float)
    return (
        A[..., :, 0] * v[..., None, 0]
        + A[..., :, 1] * v[..., None, 1]
        + A[..., :, 2] * v[..., None, 2]
    )


def matmul3(A, B):
    A = np.asarray(A, dtype=float)
    B = np.asarray(B, dtype=float)
    return (
        A[..., :, 0, None] * B[..., None, 0, :]
        + A[..., :, 1, None] * B[..., None, 1, :]
        + A[..., :, 2, None] * B[..., None, 2, :]
    )


def transpose3(A):
    return np.swapaxes(np.asarray(A, dtype=float), -1, -2)


def hat(g):
    """Skew-symmetric matrix with ``hat(g) @ v == cross(g, v)``."""
    g = np.asarray(g, dtype=float)
    z = np.zeros_like(g[..., 0])
    return np.stack(
        [
            np.stack([z, -g[..., 2], g[..., 1]], axis=-1),
            np.stack([g[..., 2], z, -g[..., 0]], axis=-1),
            np.stack([-g[..., 1], g[..., 0], z], axis=-1),
        ],
        axis=-2,
    )


def vee(M):
    M = np.asarray(M, dtype=float)
    return np.stack([M[..., 2, 1], M[..., 0, 2], M[..., 1, 0]], axis=-1)


def rot_x(psi: float) -> np.ndarray:
    """Rotation about e1 (the normal-plane phase factor R_psi)."""
    c, s = np.cos(psi), np.sin(psi)
    return np.array([[1.0, 0.0, 0.0], [0.0, c, -s], [0.0, s, c]])


def rot_y_neg(phi: float) -> np.ndarray:
    """Rotation about e2 by ``-phi``.

    Entry (1,3) is ``-sin(phi)`` and (3,1) is ``+sin(phi)``, the opposite of
    the usual right-handed y-rotation.  With ``cos(phi) = a/k``,
    ``sin(phi) = w/k`` this is the factor that tilts e3 onto the
    normalized angular velocity ``(w, 0, a)/k``.
    """
    c, s = np.cos(phi), np.sin(phi)
    return np.array([[c, 0.0, -s], [0.0, 1.0, 0.0], [s, 0.0, c]])


def rot_z(theta: float) -> np.ndarray:
    """Rotation about e3."""
    c, s = np.cos(theta), np.sin(theta)
    return np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])


def exp_coeffs(theta):
    """Return ``(sin t / t, (1 - cos t) / t**2, (t - sin t) / t**3)``.

    The second uses the half-angle form ``sinc(t/2)^2 / 2`` and the third a
    Taylor series below ``SERIES_ANGLE``; both closed forms lose digits to
    cancellation at small angles.
    """
    theta = np.asarray(theta, dtype=float)
    t2 = theta * theta
    small = np.abs(theta) < SMALL_ANGLE
    t = np.where(small, 1.0, theta)
    a = np.where(small, 1.0 - t2 / 6.0, np.sin(t) / t)
    h = 0.5 * theta
    hs = np.abs(h) < SMALL_ANGLE
    hh = np.where(hs, 1.0, h)
    sinc_half = np.where(hs, 1.0 - h * h / 6.0, np.sin(hh) / hh)
    b = 0.5 * sinc_half * sinc_half
    series = np.abs(theta) < SERIES_ANGLE
    ts = np.where(series, 1.0, theta)
    c = np.where(
        series,
        1.0 / 6.0 - t2 / 120.0 * (1.0 - t2 / 42.0 * (1.0 - t2 / 72.0 * (1.0 - t2 / 110.0))),
        (ts - np.sin(ts)) / (ts * ts * ts),
    )
    return a, b, c


def exp_so3_and_v(phi):
    """Rotation ``exp(hat(phi))`` and the left Jacobian ``V`` for a rotation vector.

    ``exp`` of the twist ``(phi, rho)`` is ``(R, V @ rho)``.
    """
    phi = np.asarray(phi, dtype=float)
    theta = np.sqrt(dot3(phi, phi))
    a, b, c = exp_coeffs(theta)
    K = hat(phi)
    K2 = matmul3(K, K)
    eye = np.broadcast_to(np.eye(3), K.shape)
    R = eye + a[..., None, None] * K + b[..., None, None] * K2
    V = eye + b[..., None, None] * K + c[..., None, None] * K2
    return R, V


@dataclass(frozen=True)
class Twist:
    """Element of se(3): angular part ``omega`` and linear part ``linear``."""

    omega: np.ndarray
    linear: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "omega", np.asarray(self.omega, dtype=float).reshape(3))
        object.__setattr__(self, "linear", np.asarray(self.linear, dtype=float).reshape(3))

    @classmethod
    def particle(cls, omega) -> "Twist":
        """Unit-speed particle twist: linear velocity fixed to e1."""
        return cls(omega, E1)

    def matrix(self) -> np.ndarray:
        M = np.zeros((4, 4))
        M[:3, :3] = hat(self.omega)
        M[:3, 3] = self.linear
        return M

    def __sub__(self, other: "Twist") -> "Twist":
        return Twist(self.omega - other.omega, self.linear - other.linear)

    def __add__(self, other: "Twist") -> "Twist":
        return Twist(self.omega + other.omega, self.linear + other.linear)

    def norm(self) -> float:
        return float(np.sqrt(dot3(self.omega, self.omega) + dot3(self.linear, self.linear)))


@dataclass(frozen=True)
class SE3:
    """Rigid motion ``x -> rotation @ x + translation``."""

    rotation: np.ndarray
    translation: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "rotation", np.asarray(self.rotation, dtype=float).reshape(3, 3))
        object.__setattr__(
            self, "translation", np.asarray(self.translation, dtype=float).reshape(3)
        )

    @classmethod
    def identity(cls) -> "SE3":
        return cls(np.eye(3), np.zeros(3))

    @classmethod
    def from_matrix(cls, M) -> "SE3":
        M = np.asarray(M, dtype=float)
        return cls(M[:3, :3], M[:3, 3])

    def matrix(self) -> np.ndarray:
        M = np.eye(4)
        M[:3, :3] = self.rotation
        M[:3, 3] = self.translation
        return M

    def is_valid(self, tol: float = FRAME_TOL) -> bool:
        R = self.rotation
        return bool(
            np.all(np.isfinite(R))
            and np.all(np.isfinite(self.translation))
            and np.max(np.abs(R.T @ R - np.eye(3))) <= tol
            and abs(np.linalg.det(R) - 1.0) <= tol
        )

    def __matmul__(self, other: "SE3") -> "SE3":
        return se3_compose(self, other)

    def inv(self) -> "SE3":
        return se3_inverse(self)


def se3_compose(a: SE3, b: SE3) -> SE3:
    return SE3(
        matmul3(a.rotation, b.rotation),
        matvec3(a.rotation, b.translation) + a.translation,
    )


def se3_inverse(g: SE3) -> SE3:
    Rt = transpose3(g.rotation)
    return SE3(Rt, -matvec3(Rt, g.translation))


def adjoint(g: SE3, xi: Twist) -> Twist:
    """``Ad_g xi``, i.e. the twist whose matrix is ``g xi^ g^-1``."""
    w = matvec3(g.rotation, xi.omega)
    return Twist(w, matvec3(g.rotation, xi.linear) + cross3(g.translation, w))


def se3_exp(xi: Twist, t: float = 1.0) -> SE3:
    """Closed-form ``exp(t xi^)`` (a screw motion)."""
    if t == 0.0:
        return SE3.identity()
    R, V = exp_so3_and_v(t * xi.omega)
    return SE3(R, matvec3(V, t * xi.linear))


def orthonormalize(frame) -> np.ndarray:
    """Gram-Schmidt on the columns (x, y, z) of a near-orthonormal frame.

    The third column is rebuilt as ``x cross y`` so the result is always
    right-handed; a near-degenerate or far-from-orthonormal input raises
    ``FrameError``.
    """
    F = np.asarray(frame, dtype=float)
    x, y, z = F[:, 0], F[:, 1], F[:, 2]
    if not np.all(np.isfinite(F)):
        raise FrameError("frame contains non-finite entries")
    lengths = np.array([np.linalg.norm(x), np.linalg.norm(y), np.linalg.norm(z)])
    dots = np.array([x @ y, x @ z, y @ z])
    if np.any(np.abs(lengths - 1.0) > 1e-3) or np.any(np.abs(dots) > 1e-3):
        raise FrameError(
            f"frame too far from orthonormal (lengths {lengths}, cross dots {dots})"
        )
    if np.dot(np.cross(x, y), z) <= 0.0:
        raise FrameError("frame is left-handed")
    x = x / np.linalg.norm(x)
    y = y - (x @ y) * x
    y = y / np.linalg.norm(y)
    return np.column_stack([x, y, np.cross(x, y)])
