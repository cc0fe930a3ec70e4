import math

import numpy as np
import pytest


def unit(rng, n=None):
    v = rng.standard_normal(3 if n is None else (n, 3))
    return v / np.linalg.norm(v, axis=-1, keepdims=True)


def rotation(rng):
    """Random proper rotation via QR of a Gaussian matrix."""
    q, r = np.linalg.qr(rng.standard_normal((3, 3)))
    q = q * np.sign(np.diag(r))
    if np.linalg.det(q) < 0:
        q[:, 2] = -q[:, 2]
    return q


def homogeneous(R, t):
    M = np.eye(4)
    M[:3, :3] = R
    M[:3, 3] = t
    return M


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def fit_helix(points, headings):
    """Axis from the headings' best-fit plane normal, radius from an algebraic circle fit."""
    H = headings - headings.mean(axis=0)
    axis = np.linalg.svd(H)[2][2]
    e = np.eye(3)[np.argmin(np.abs(axis))]
    u = e - (e @ axis) * axis
    u /= np.linalg.norm(u)
    v = np.cross(axis, u)
    q = np.column_stack([points @ u, points @ v])
    A = np.column_stack([2 * q, np.ones(len(q))])
    sol = np.linalg.lstsq(A, (q**2).sum(axis=1), rcond=None)[0]
    radius = math.sqrt(sol[2] + sol[:2] @ sol[:2])
    along = points @ axis
    return axis, radius, along
