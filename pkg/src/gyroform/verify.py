"""Sampled checks of the sign kernels and algebraic identities.

Inequality checks pass when the smallest sampled value is at least
``-bound``; residual checks pass when the largest residual is at most
``bound``.
"""

from __future__ import annotations

from dataclasses import dataclass
import math

import numpy as np

from .equilibria import EquilibriumSpec, equilibrium_family, is_shape_equilibrium
from .framed import FramedState, state_to_group
from .laws import LawKind, LawParams, group_form_controls, two_vehicle_controls
from .lie import SE3, Twist, adjoint, se3_compose, se3_exp, se3_inverse
from .lyapunov import (
    Frames,
    ShapeTriple,
    circ_inequality_vector,
    circ_log_argument,
    rect_inequality,
    rect_inequality_vector,
    v_circ,
    v_circ_group,
    v_rect,
    v_rect_group,
    vdot_rect_analytic,
)

INEQUALITY_BOUND = 1e-12
ALGEBRA_BOUND = 1e-12
SUITES = ("rect", "circ", "algebra")


@dataclass(frozen=True)
class Check:
    name: str
    samples: int
    minimum: float
    maximum: float
    bound: float
    lower: bool  # True: inequality (min >= -bound); False: residual (max <= bound)

    @property
    def passed(self) -> bool:
        if self.lower:
            return self.minimum >= -self.bound
        return self.maximum <= self.bound

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        if self.lower:
            detail = f"min={self.minimum:.3e} (>= {-self.bound:.0e})"
        else:
            detail = f"min={self.minimum:.3e} max={self.maximum:.3e} (<= {self.bound:.0e})"
        return f"{status} {self.name}: samples={self.samples} {detail}"


def _inequality(name, values, bound=INEQUALITY_BOUND) -> Check:
    v = np.asarray(values, dtype=float)
    return Check(name, v.size, float(v.min()), float(v.max()), bound, True)


def _residual(name, values, bound=ALGEBRA_BOUND) -> Check:
    v = np.asarray(values, dtype=float)
    return Check(name, v.size, float(v.min()), float(v.max()), bound, False)


def random_units(rng, n: int) -> np.ndarray:
    v = rng.standard_normal((n, 3))
    return v / np.linalg.norm(v, axis=1, keepdims=True)


def random_frames(rng, n: int) -> np.ndarray:
    """``(n, 3, 3)`` uniformly random right-handed frames (columns x, y, z)."""
    x = random_units(rng, n)
    h = rng.standard_normal((n, 3))
    y = h - np.sum(h * x, axis=1, keepdims=True) * x
    y /= np.linalg.norm(y, axis=1, keepdims=True)
    return np.stack([x, y, np.cross(x, y)], axis=-1)


def random_shapes(rng, n: int, scale: float = 3.0) -> ShapeTriple:
    r = random_units(rng, n) * rng.uniform(0.1, scale, size=(n, 1))
    return ShapeTriple(r, random_units(rng, n), random_units(rng, n))


def random_state(rng, box: float = 4.0) -> FramedState:
    return FramedState.from_frame(rng.uniform(-box / 2, box / 2, 3), random_frames(rng, 1)[0])


def rect_suite(samples: int = 1_000_000, seed: int = 0) -> list[Check]:
    rng = np.random.default_rng(seed)
    out = []
    for sign in (1, -1):
        phi = rng.uniform(-np.pi, np.pi, size=(2, samples))
        out.append(_inequality(f"rect angle form, sign {sign:+d}", rect_inequality(phi[0], phi[1], sign)))
        s = random_shapes(rng, samples)
        out.append(_inequality(f"rect vector form, sign {sign:+d}", rect_inequality_vector(s, sign)))
    # V-dot along the law: nonpositive wherever V is defined.
    m = max(samples // 10, 1)
    p = LawParams(alpha=1.0, r0=2.0, mu=0.5, eta=0.4)
    F1, F2 = random_frames(rng, m), random_frames(rng, m)
    keep = 1.0 + np.sum(F1[:, :, 0] * F2[:, :, 0], axis=1) > 1e-9
    F1, F2 = F1[keep], F2[keep]
    r = random_units(rng, len(F1)) * rng.uniform(0.1, 6.0, size=(len(F1), 1))
    s = ShapeTriple(r, F1[:, :, 0], F2[:, :, 0])
    vd = vdot_rect_analytic(s, (Frames(*np.moveaxis(F1, -1, 0)), Frames(*np.moveaxis(F2, -1, 0))), p)
    out.append(_inequality("rect V-dot <= 0 (as -V-dot)", -np.asarray(vd)))
    return out


def circ_suite(samples: int = 1_000_000, seed: int = 0) -> list[Check]:
    rng = np.random.default_rng(seed + 1)
    out = []
    for sign in (-1, 1):
        s = random_shapes(rng, samples)
        out.append(_inequality(f"circ vector form, sign {sign:+d}", circ_inequality_vector(s, sign)))
    s = random_shapes(rng, samples)
    out.append(_inequality("circ log argument", circ_log_argument(s)))
    return out


def _random_twist(rng) -> Twist:
    return Twist(rng.standard_normal(3) * 2.0, rng.standard_normal(3) * 2.0)


def _random_group(rng) -> SE3:
    return SE3(random_frames(rng, 1)[0], rng.uniform(-3.0, 3.0, 3))


def algebra_suite(samples: int = 1000, seed: int = 0) -> list[Check]:
    rng = np.random.default_rng(seed + 2)
    n = samples
    exp_orth, subgroup, adj, inv, eq, ctrl_rect, ctrl_circ, vr, vc = ([] for _ in range(9))
    for _ in range(n):
        xi = _random_twist(rng)
        g = _random_group(rng)
        t1, t2 = rng.uniform(-2.0, 2.0, 2)
        E = se3_exp(xi, t1)
        exp_orth.append(np.max(np.abs(E.rotation.T @ E.rotation - np.eye(3))))
        both = se3_compose(E, se3_exp(xi, t2)).matrix()
        subgroup.append(np.max(np.abs(both - se3_exp(xi, t1 + t2).matrix())))
        G = g.matrix()
        adj.append(np.max(np.abs(adjoint(g, xi).matrix() - G @ xi.matrix() @ np.linalg.inv(G))))
        inv.append(np.max(np.abs(se3_compose(g, se3_inverse(g)).matrix() - np.eye(4))))

        spec = EquilibriumSpec(
            w=float(rng.uniform(-2, 2)),
            a=float(rng.uniform(0, 2)),
            psi1=float(rng.uniform(-np.pi, np.pi)),
            psi2=float(rng.uniform(-np.pi, np.pi)),
            theta=float(rng.uniform(-np.pi, np.pi)),
            b3=float(rng.uniform(-2, 2)),
        )
        eq.append(is_shape_equilibrium(equilibrium_family(spec), *spec.twists())[1])

        s1, s2 = random_state(rng), random_state(rng)
        if np.linalg.norm(s2.r - s1.r) < 0.1:
            continue
        g1, g2 = state_to_group(s1), state_to_group(s2)
        shape = ShapeTriple.from_states(s1, s2)
        for kind, sink in ((LawKind.RECTILINEAR, ctrl_rect), (LawKind.CIRCLING, ctrl_circ)):
            p = LawParams(kind=kind)
            a = np.array(group_form_controls(g1, g2, p))
            b = np.array(two_vehicle_controls(s1, s2, p))
            sink.append(np.max(np.abs(a - b)))
        p = LawParams()
        gs = se3_compose(se3_inverse(g1), g2)
        if 1.0 + np.dot(s1.x, s2.x) > 1e-6:
            vr.append(abs(v_rect_group(gs, p) - v_rect(shape, p)))
        if circ_log_argument(shape) > 1e-6:
            pc = p.with_(kind=LawKind.CIRCLING)
            vc.append(abs(v_circ_group(gs, pc) - v_circ(shape, pc)))
    return [
        _residual("exp rotation orthonormal", exp_orth),
        _residual("exp one-parameter subgroup", subgroup),
        _residual("adjoint equals conjugation", adj),
        _residual("compose with inverse", inv),
        _residual("equilibrium family residual", eq),
        _residual("group vs frame controls (rect)", ctrl_rect),
        _residual("group vs frame controls (circ)", ctrl_circ),
        _residual("group vs frame V (rect)", vr),
        _residual("group vs frame V (circ)", vc),
    ]


def run_suites(
    suite: str = "all",
    samples: int | None = None,
    seed: int = 0,
    algebra_samples: int | None = None,
) -> list[Check]:
    """``samples`` sizes the vectorized inequality suites, ``algebra_samples`` the identity suite."""
    names = SUITES if suite == "all" else (suite,)
    out = []
    for name in names:
        if name == "rect":
            out += rect_suite(samples or 1_000_000, seed)
        elif name == "circ":
            out += circ_suite(samples or 1_000_000, seed)
        elif name == "algebra":
            out += algebra_suite(algebra_samples or 1000, seed)
        else:
            raise ValueError(f"unknown suite {name!r}; choose from {SUITES + ('all',)}")
    return out


def all_passed(checks) -> bool:
    return all(c.passed for c in checks) and not any(math.isnan(c.minimum) for c in checks)
