"""Pairwise steering laws for unit-speed particles.

Every law here has the same shape.  Particle ``j`` feels, from each other
particle ``k``, the term

    F(rel, x_j, n, x_k) - f(|rel|) (rel_hat . n),     rel = r_j - r_k,

evaluated with ``n = y_j`` for the ``u`` control and ``n = z_j`` for ``v``.
``f`` pushes the pair apart when closer than ``r0`` and pulls it together
when farther; ``F`` aligns headings.  The two alignment terms are

    rectilinear:  F = -sign eta (rh.x_j)(rh.n) + mu x_k.n
    circling:     F = +sign eta (rh.x_j)(rh.n) + mu (-x_k.n + 2 (rh.x_k)(rh.n))

so ``sign = +1`` picks the upper branch of each.  For the rectilinear law
the upper branch turns headings perpendicular to the baseline, the lower
branch parallel to it.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from enum import Enum
import math
from typing import Sequence

import numpy as np

from .framed import ControlTriple, FramedState
from .lie import SE3, dot3, matvec3, se3_compose, se3_inverse, transpose3

COLLISION_DISTANCE = 1e-9
UNIT_TOL = 1e-6


class LawKind(str, Enum):
    RECTILINEAR = "rect"
    CIRCLING = "circ"
    NONE = "none"


DEFAULT_SIGN = {LawKind.RECTILINEAR: 1, LawKind.CIRCLING: -1, LawKind.NONE: 1}


class CollisionError(ValueError):
    def __init__(self, i: int, j: int, distance: float):
        super().__init__(f"particles {i} and {j} coincide (distance {distance:.3e})")
        self.pair = (i, j)
        self.distance = distance


class AssumptionError(ValueError):
    """Law parameters violate a standing assumption (e.g. A4: mu > eta/2 > 0)."""


@dataclass(frozen=True)
class LawParams:
    alpha: float = 1.0
    r0: float = 1.0
    mu: float = 0.5
    eta: float = 0.4
    kind: LawKind = LawKind.RECTILINEAR
    sign: int | None = field(default=None)

    def __post_init__(self):
        object.__setattr__(self, "kind", LawKind(self.kind))
        if self.sign is None:
            object.__setattr__(self, "sign", DEFAULT_SIGN[self.kind])
        if self.sign not in (1, -1):
            raise AssumptionError(f"sign must be +1 or -1, got {self.sign!r}")
        for name in ("alpha", "r0", "mu", "eta"):
            if not math.isfinite(getattr(self, name)):
                raise AssumptionError(f"{name} must be finite")
        if not self.alpha > 0.0:
            raise AssumptionError(f"alpha must be positive, got {self.alpha}")
        if not self.r0 > 0.0:
            raise AssumptionError(f"r0 must be positive, got {self.r0}")
        if not self.mu > 0.5 * self.eta > 0.0:
            raise AssumptionError(
                f"A4 violated: need mu > eta/2 > 0, got mu={self.mu}, eta={self.eta}"
            )

    def with_(self, **changes) -> "LawParams":
        return replace(self, **changes)


def f_interaction(rho, p: LawParams):
    """Separation feedback ``alpha (1 - (r0/rho)^2)``; zero at ``rho = r0``."""
    rho = np.asarray(rho, dtype=float)
    if np.any(rho <= 0.0):
        raise ValueError("separation must be positive")
    out = p.alpha * (1.0 - (p.r0 / rho) ** 2)
    return float(out) if out.ndim == 0 else out


def circling_separation(p: LawParams) -> float:
    """Positive root of ``f(d) = 2/d``, the circling diameter."""
    a = p.alpha
    return (1.0 + math.sqrt(1.0 + (a * p.r0) ** 2)) / a


def _h_circ_raw(rho, p):
    return p.alpha * (rho + p.r0**2 / rho) - 2.0 * np.log(rho)


def h_potential(rho, p: LawParams, kind: LawKind | str | None = None):
    """Separation potential, normalized so its minimum is 0.

    Rectilinear: ``h' = f``, minimum at ``r0``.  Circling: ``h' = f - 2/rho``,
    minimum at ``circling_separation(p)``.
    """
    kind = p.kind if kind is None else LawKind(kind)
    rho = np.asarray(rho, dtype=float)
    if np.any(rho <= 0.0):
        raise ValueError("separation must be positive")
    if kind == LawKind.CIRCLING:
        out = _h_circ_raw(rho, p) - _h_circ_raw(circling_separation(p), p)
    else:
        out = p.alpha * (rho + p.r0**2 / rho - 2.0 * p.r0)
    return float(out) if out.ndim == 0 else out


def _check_unit(*vectors):
    for v in vectors:
        n = np.sqrt(dot3(v, v))
        if np.any(np.abs(n - 1.0) > UNIT_TOL):
            raise ValueError("F expects unit vectors")


def F_rect(r_unit, x_self, n_self, x_other, p: LawParams):
    _check_unit(r_unit, x_self, n_self, x_other)
    out = -p.sign * p.eta * dot3(r_unit, x_self) * dot3(r_unit, n_self) + p.mu * dot3(
        x_other, n_self
    )
    return float(out) if np.ndim(out) == 0 else out


def F_circ(r_unit, x_self, n_self, x_other, p: LawParams):
    _check_unit(r_unit, x_self, n_self, x_other)
    rn = dot3(r_unit, n_self)
    out = p.sign * p.eta * dot3(r_unit, x_self) * rn + p.mu * (
        -dot3(x_other, n_self) + 2.0 * dot3(r_unit, x_other) * rn
    )
    return float(out) if np.ndim(out) == 0 else out


def alignment_F(p: LawParams):
    if p.kind == LawKind.RECTILINEAR:
        return F_rect
    if p.kind == LawKind.CIRCLING:
        return F_circ
    return None


def pair_terms(r, R, p: LawParams, strict: bool = True):
    """Per-pair ``(u, v)`` contributions, before any averaging.

    ``r`` is ``(..., n, 3)`` and ``R`` is ``(..., n, 3, 3)``.  Returns an
    array ``(..., n, n, 2)`` whose ``[j, k]`` entry is what particle ``k``
    contributes to particle ``j``; the diagonal is zero.  With
    ``strict=False`` coincident pairs contribute zero instead of raising.
    """
    r = np.asarray(r, dtype=float)
    R = np.asarray(R, dtype=float)
    n = r.shape[-2]
    out = np.zeros(r.shape[:-1] + (n, 2))
    if p.kind == LawKind.NONE or n < 2:
        return out
    rel = r[..., :, None, :] - r[..., None, :, :]
    dist = np.sqrt(dot3(rel, rel))
    offdiag = ~np.eye(n, dtype=bool)
    close = (dist < COLLISION_DISTANCE) & offdiag
    if np.any(close):
        if strict:
            idx = np.argwhere(close)[0]
            j, k = int(idx[-2]), int(idx[-1])
            raise CollisionError(j, k, float(dist[tuple(idx)]))
    safe = np.where(offdiag & ~close, dist, 1.0)
    unit = rel / safe[..., None]
    # Components in particle j's own frame: R_j^T rel_hat and R_j^T x_k.
    Rt = transpose3(R)[..., :, None, :, :]
    rb = matvec3(Rt, unit)
    xk = matvec3(Rt, R[..., None, :, :, 0])
    f = p.alpha * (1.0 - (p.r0 / safe) ** 2)
    if p.kind == LawKind.RECTILINEAR:
        A = -p.sign * p.eta * rb[..., 0] - f
        B = p.mu
    else:
        A = p.sign * p.eta * rb[..., 0] + 2.0 * p.mu * dot3(unit, R[..., None, :, :, 0]) - f
        B = -p.mu
    live = (offdiag & ~close).astype(float)
    out[..., 0] = live * (A * rb[..., 1] + B * xk[..., 1])
    out[..., 1] = live * (A * rb[..., 2] + B * xk[..., 2])
    return out


def _accumulate(terms):
    # Fixed summation order over k keeps batched and single runs bit-identical.
    acc = terms[..., 0, :].copy()
    for k in range(1, terms.shape[-2]):
        acc += terms[..., k, :]
    return acc


def _pack(uv):
    return np.concatenate([uv, np.zeros(uv.shape[:-1] + (1,))], axis=-1)


class PairwiseLaw:
    """Array feedback law ``law(r, R) -> (..., n, 3)`` controls ``[u, v, 0]``.

    ``average=True`` scales the pair sums by ``1/n`` (the n-particle law);
    ``average=False`` is the bare two-particle law.
    """

    def __init__(self, params: LawParams, average: bool, strict: bool = True):
        self.params = params
        self.average = average
        self.strict = strict

    def __call__(self, r, R):
        uv = _accumulate(pair_terms(r, R, self.params, strict=self.strict))
        if self.average:
            uv = uv / r.shape[-2]
        return _pack(uv)

    def run_compiled(self, r0, R0, dt, T, sample_every, monitor=False):
        from ._fast import run_pairwise

        return run_pairwise(r0, R0, self.params, self.average, dt, T, sample_every, monitor)

    def __repr__(self):
        return f"PairwiseLaw({self.params!r}, average={self.average})"


def pairwise_law(p: LawParams, average: bool, strict: bool = True) -> PairwiseLaw:
    return PairwiseLaw(p, average, strict)


def two_vehicle_law(p: LawParams, strict: bool = True):
    return pairwise_law(p, average=False, strict=strict)


def n_vehicle_law(p: LawParams, strict: bool = True):
    return pairwise_law(p, average=True, strict=strict)


def _stack_states(states: Sequence[FramedState]):
    return np.stack([s.r for s in states]), np.stack([s.frame for s in states])


def two_vehicle_controls(s1: FramedState, s2: FramedState, p: LawParams):
    r, R = _stack_states([s1, s2])
    c = two_vehicle_law(p)(r, R)
    return ControlTriple(*c[0]), ControlTriple(*c[1])


def n_vehicle_controls(states: Sequence[FramedState], p: LawParams) -> list[ControlTriple]:
    if len(states) < 2:
        raise ValueError("need at least two particles")
    r, R = _stack_states(states)
    c = n_vehicle_law(p)(r, R)
    return [ControlTriple(*row) for row in c]


def group_form_controls(g1: SE3, g2: SE3, p: LawParams):
    """Controls written in the shape variable ``g = g1^-1 g2``.

    Uses only the entries of ``g`` and ``g^-1`` (1-based ``g_ij`` below as
    ``G[i-1, j-1]``): rows 2 and 3 of the first column give the heading of
    the other particle, the fourth column the baseline.
    """
    g = se3_compose(se3_inverse(g1), g2)
    gi = se3_inverse(g)
    G, Gi = g.matrix(), gi.matrix()
    r = math.sqrt(G[0, 3] ** 2 + G[1, 3] ** 2 + G[2, 3] ** 2)
    if r < COLLISION_DISTANCE:
        raise CollisionError(0, 1, r)
    f = f_interaction(r, p)
    s, eta, mu = p.sign, p.eta, p.mu
    out = []
    for M, Mi in ((G, Gi), (Gi, G)):
        uv = []
        for row in (1, 2):
            if p.kind == LawKind.RECTILINEAR:
                val = -s * eta * M[0, 3] * M[row, 3] / r**2 + mu * M[row, 0] + f * M[row, 3] / r
            elif p.kind == LawKind.CIRCLING:
                val = (
                    s * eta * M[0, 3] * M[row, 3] / r**2
                    + mu * (-M[row, 0] - 2.0 * Mi[0, 3] * M[row, 3] / r**2)
                    + f * M[row, 3] / r
                )
            else:
                val = 0.0
            uv.append(val)
        out.append(ControlTriple(uv[0], uv[1], 0.0))
    return out[0], out[1]
