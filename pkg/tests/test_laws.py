import math
from types import SimpleNamespace

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.integrate import quad

from conftest import rotation, unit
from gyroform.equilibria import shape_velocity
from gyroform.framed import ControlTriple, FramedState, state_to_group
from gyroform.laws import (
    AssumptionError,
    CollisionError,
    F_circ,
    F_rect,
    LawKind,
    LawParams,
    circling_separation,
    f_interaction,
    group_form_controls,
    h_potential,
    n_vehicle_controls,
    two_vehicle_controls,
)
from gyroform.lie import SE3, se3_compose

RECT = LawParams(alpha=1.0, r0=2.0, mu=0.5, eta=0.4)


def eta_free(p, mu=0.5):
    """Same law with eta = 0; A4 forbids this in LawParams, the formulas do not care."""
    return SimpleNamespace(alpha=p.alpha, r0=p.r0, mu=mu, eta=0.0, sign=p.sign, kind=p.kind)
CIRC = LawParams(alpha=1.0, r0=1.0, mu=0.5, eta=0.4, kind="circ")


def random_state(rng, box=4.0):
    return FramedState.from_frame(rng.uniform(-box / 2, box / 2, 3), rotation(rng))


def brute_force(states, p, average):
    """Independent per-pair loop over the written-out law."""
    out = []
    n = len(states)
    for j, sj in enumerate(states):
        u = v = 0.0
        for k, sk in enumerate(states):
            if k == j:
                continue
            rel = sj.r - sk.r
            d = math.sqrt(rel @ rel)
            rh = rel / d
            f = p.alpha * (1 - (p.r0 / d) ** 2)
            terms = []
            for nrm in (sj.y, sj.z):
                if p.kind == LawKind.RECTILINEAR:
                    F = -p.sign * p.eta * (rh @ sj.x) * (rh @ nrm) + p.mu * (sk.x @ nrm)
                else:
                    F = p.sign * p.eta * (rh @ sj.x) * (rh @ nrm) + p.mu * (
                        -(sk.x @ nrm) + 2 * (rh @ sk.x) * (rh @ nrm)
                    )
                terms.append(F - f * (rh @ nrm))
            u += terms[0]
            v += terms[1]
        if average:
            u, v = u / n, v / n
        out.append(np.array([u, v, 0.0]))
    return out


def test_f_values():
    p = LawParams(alpha=1.0, r0=1.0)
    assert f_interaction(1.0, p) == 0.0
    assert f_interaction(2.0, p) == 0.75
    rho = np.geomspace(1.0, 1e6, 200)
    vals = f_interaction(rho, p.with_(alpha=1.7))
    assert np.all(np.diff(vals) > 0) and abs(vals[-1] - 1.7) < 1e-11
    with pytest.raises(ValueError):
        f_interaction(0.0, p)


def test_h_rect_values_and_derivative():
    p = LawParams(alpha=1.0, r0=1.0)
    assert h_potential(1.0, p, "rect") == 0.0
    integral, _ = quad(lambda s: f_interaction(s, p), 1.0, 2.0)
    assert h_potential(2.0, p, "rect") == pytest.approx(integral, abs=1e-12)
    assert integral == pytest.approx(0.5, abs=1e-12)
    q = LawParams(alpha=0.7, r0=1.8)
    for rho in (0.3, 1.0, 2.5, 9.0):
        fd = (h_potential(rho + 1e-6, q, "rect") - h_potential(rho - 1e-6, q, "rect")) / 2e-6
        assert fd == pytest.approx(f_interaction(rho, q), abs=1e-7)


def test_h_circ_minimum_and_derivative():
    d = circling_separation(CIRC)
    assert d == pytest.approx(1 + math.sqrt(2), abs=1e-15)
    # root of alpha rho^2 - 2 rho - alpha r0^2 by numpy, independent of the closed form
    roots = np.roots([CIRC.alpha, -2.0, -CIRC.alpha * CIRC.r0**2])
    assert d == pytest.approx(roots.max(), abs=1e-12)
    assert h_potential(d, CIRC) == pytest.approx(0.0, abs=1e-15)
    for rho in (0.5, 1.5, 3.0, 10.0):
        integral, _ = quad(lambda s: f_interaction(s, CIRC) - 2.0 / s, d, rho)
        assert h_potential(rho, CIRC) == pytest.approx(integral, abs=1e-10)
        assert h_potential(rho, CIRC) > 0


def test_F_rect_cases(rng):
    e1, e2, e3 = np.eye(3)
    assert F_rect(e1, e1, e2, e3, RECT) == 0.0
    p0 = eta_free(RECT)
    for _ in range(100):
        r, xs, n, xo = unit(rng, 4)
        assert F_rect(r, xs, n, xo, p0) == pytest.approx(0.5 * (xo @ n), abs=1e-15)
        want = -RECT.eta * (r @ xs) * (r @ n) + RECT.mu * (xo @ n)
        assert abs(F_rect(r, xs, n, xo, RECT) - want) <= 1e-15
    with pytest.raises(ValueError):
        F_rect(2 * e1, e1, e2, e3, RECT)


def test_F_circ_cases(rng):
    e1, e2, e3 = np.eye(3)
    assert F_circ(e1, e1, e2, e3, CIRC) == 0.0
    for _ in range(100):
        r, xs, n, xo = unit(rng, 4)
        want = CIRC.sign * CIRC.eta * (r @ xs) * (r @ n) + CIRC.mu * (-(xo @ n) + 2 * (r @ xo) * (r @ n))
        assert abs(F_circ(r, xs, n, xo, CIRC) - want) <= 1e-15
        # heading perpendicular to the baseline: the eta term drops
        xp = xs - (xs @ r) * r
        xp /= np.linalg.norm(xp)
        assert F_circ(r, xp, n, xo, CIRC) == pytest.approx(F_circ(r, xp, n, xo, eta_free(CIRC)), abs=1e-15)


def test_two_vehicle_equilibria_rect():
    e1, e2 = np.eye(3)[:2]
    # leader-follower: headings along the baseline
    s1 = FramedState.from_heading([0, 0, 0], e1)
    s2 = FramedState.from_heading([3.7, 0, 0], e1)
    for c in two_vehicle_controls(s1, s2, RECT):
        assert np.max(np.abs(c)) <= 1e-15
    # perpendicular baseline at r0
    s2 = FramedState.from_heading(RECT.r0 * e2, e1)
    for c in two_vehicle_controls(s1, s2, RECT):
        assert np.max(np.abs(c)) <= 1e-15


def test_circling_equilibrium_is_stationary_shape():
    d = circling_separation(CIRC)
    s1 = FramedState([0, 0, 0], [1, 0, 0], [0, 1, 0], [0, 0, 1])
    s2 = FramedState([0, d, 0], [-1, 0, 0], [0, -1, 0], [0, 0, 1])
    c1, c2 = two_vehicle_controls(s1, s2, CIRC)
    # steering is toward the partner (within the plane), at curvature 2/d
    assert c1.u == pytest.approx(2 / d, abs=1e-14) and abs(c1.v) <= 1e-15
    g = se3_compose(state_to_group(s1).inv(), state_to_group(s2))
    xi = shape_velocity(g, c1.twist(), c2.twist())
    assert max(np.max(np.abs(xi.omega)), np.max(np.abs(xi.linear))) <= 1e-12


@pytest.mark.parametrize("p", [RECT, CIRC, RECT.with_(sign=-1), CIRC.with_(sign=1)])
def test_pairwise_matches_brute_force(rng, p):
    for _ in range(30):
        states = [random_state(rng) for _ in range(3)]
        got = n_vehicle_controls(states, p)
        want = brute_force(states, p, average=True)
        for a, b in zip(got, want):
            assert np.max(np.abs(np.array(a) - b)) <= 1e-14
        s1, s2 = states[:2]
        got = two_vehicle_controls(s1, s2, p)
        want = brute_force([s1, s2], p, average=False)
        for a, b in zip(got, want):
            assert np.max(np.abs(np.array(a) - b)) <= 1e-14


def test_n_vehicle_two_is_half_of_pair(rng):
    for p in (RECT, CIRC):
        s1, s2 = random_state(rng), random_state(rng)
        pair = two_vehicle_controls(s1, s2, p)
        avg = n_vehicle_controls([s1, s2], p)
        for a, b in zip(pair, avg):
            assert np.allclose(np.array(a) / 2, b, atol=1e-15)


def test_n_vehicle_aligned_formation_is_at_rest():
    r0 = RECT.r0
    # equilateral triangle of side r0 in the plane perpendicular to the common heading
    pts = [np.array([0, 0, 0]), np.array([0, r0, 0]), np.array([0, r0 / 2, r0 * math.sqrt(3) / 2])]
    states = [FramedState.from_heading(p, [1, 0, 0]) for p in pts]
    for c in n_vehicle_controls(states, RECT):
        assert np.max(np.abs(c)) <= 1e-15


def test_group_form_cases(rng):
    p0 = eta_free(RECT)
    g1 = SE3.identity()
    g2 = SE3(np.eye(3), [0, RECT.r0, 0])
    c1, c2 = group_form_controls(g1, g2, p0)
    assert c1.u == 0.0 and c2.u == 0.0
    for p in (RECT, CIRC, RECT.with_(sign=-1), CIRC.with_(sign=1)):
        for _ in range(200):
            s1, s2 = random_state(rng), random_state(rng)
            a = np.array(group_form_controls(state_to_group(s1), state_to_group(s2), p))
            b = np.array(two_vehicle_controls(s1, s2, p))
            assert np.max(np.abs(a - b)) <= 1e-12


def _relabel_v_frame(s):
    # (y, z) -> (z, -y): a quarter-turn gauge about x
    return FramedState(s.r, s.x, s.z, -s.y)


@pytest.mark.parametrize("p", [RECT, CIRC])
def test_symmetries(rng, p):
    for _ in range(200):
        s1, s2 = random_state(rng), random_state(rng)
        c1, c2 = two_vehicle_controls(s1, s2, p)
        # v-law is the u-law with (y, z) -> (z, -y)
        d1, _ = two_vehicle_controls(_relabel_v_frame(s1), s2, p)
        assert abs(d1.u - c1.v) <= 1e-12 and abs(d1.v + c1.u) <= 1e-12
        # relabeling: swapping the vehicles swaps the controls
        e2, e1 = two_vehicle_controls(s2, s1, p)
        assert np.max(np.abs(np.array(e1) - np.array(c1))) <= 1e-12
        assert np.max(np.abs(np.array(e2) - np.array(c2))) <= 1e-12
        # common rigid motion
        Rh, th = rotation(rng), rng.uniform(-5, 5, 3)
        m1 = FramedState.from_frame(Rh @ s1.r + th, Rh @ s1.frame)
        m2 = FramedState.from_frame(Rh @ s2.r + th, Rh @ s2.frame)
        f1, f2 = two_vehicle_controls(m1, m2, p)
        assert np.max(np.abs(np.array(f1 + f2) - np.array(c1 + c2))) <= 1e-12
        # gauge: rotating (y1, z1) about x1 leaves the steering vector unchanged
        ang = rng.uniform(-np.pi, np.pi)
        ca, sa = math.cos(ang), math.sin(ang)
        t1 = FramedState(s1.r, s1.x, ca * s1.y + sa * s1.z, -sa * s1.y + ca * s1.z)
        h1, h2 = two_vehicle_controls(t1, s2, p)
        assert np.max(np.abs(h1.u * t1.y + h1.v * t1.z - (c1.u * s1.y + c1.v * s1.z))) <= 1e-12
        assert np.max(np.abs(np.array(h2) - np.array(c2))) <= 1e-12


def test_assumption_checks():
    with pytest.raises(AssumptionError, match="A4"):
        LawParams(mu=0.1, eta=0.4)
    with pytest.raises(AssumptionError, match="A4"):
        LawParams(mu=0.5, eta=0.0)
    with pytest.raises(AssumptionError):
        LawParams(sign=0)
    with pytest.raises(AssumptionError):
        LawParams(alpha=-1.0)
    with pytest.raises(AssumptionError):
        LawParams(r0=math.inf)
    assert LawParams().sign == 1 and LawParams(kind="circ").sign == -1


def test_collision_raises():
    s = FramedState.from_heading([1, 1, 1], [1, 0, 0])
    with pytest.raises(CollisionError):
        two_vehicle_controls(s, s, RECT)
    with pytest.raises(CollisionError):
        group_form_controls(state_to_group(s), state_to_group(s), RECT)


def test_none_law_is_zero(rng):
    p = LawParams(kind="none")
    for c in two_vehicle_controls(random_state(rng), random_state(rng), p):
        assert c == ControlTriple(0.0, 0.0, 0.0)


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_controls_invariant_under_rigid_motion_property(seed):
    rng = np.random.default_rng(seed)
    states = [random_state(rng) for _ in range(4)]
    Rh, th = rotation(rng), rng.uniform(-5, 5, 3)
    moved = [FramedState.from_frame(Rh @ s.r + th, Rh @ s.frame) for s in states]
    for p in (RECT, CIRC):
        a = np.array(n_vehicle_controls(states, p))
        b = np.array(n_vehicle_controls(moved, p))
        assert np.max(np.abs(a - b)) <= 1e-12
