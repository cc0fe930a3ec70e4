"""Acceptance criteria 1-11 at their stated tolerances.

Each criterion prints one ``PASS``/``FAIL`` line.  Run under pytest, or
directly with ``python3 tests/test_acceptance.py`` for the summary alone.
"""

import math
import sys
import time
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from conftest import fit_helix, rotation  # noqa: E402
from gyroform.equilibria import (  # noqa: E402
    EquilibriumSpec,
    FormationClass,
    classify,
    controls_from_omega,
    equilibrium_family,
    equilibrium_residuals,
    helix_geometry,
    is_shape_equilibrium,
    omega_from_polar,
)
from gyroform.framed import (  # noqa: E402
    FramedState,
    advance,
    frame_error,
    integrate,
    integrate_arrays,
    state_to_group,
)
from gyroform.harness import (  # noqa: E402
    Scenario,
    TerminalClass,
    fit_common_circle,
    random_initial_states,
    run_scenario,
)
from gyroform.laws import LawParams, group_form_controls, two_vehicle_controls, two_vehicle_law  # noqa: E402
from gyroform.lie import SE3, se3_compose, se3_inverse  # noqa: E402
from gyroform.lyapunov import (  # noqa: E402
    Frames,
    ShapeTriple,
    circ_log_argument,
    v_circ,
    v_circ_group,
    v_rect,
    v_rect_group,
    vdot_rect_analytic,
)
from gyroform.verify import circ_suite, random_frames, random_units, rect_suite  # noqa: E402

RECT = LawParams(alpha=1.0, r0=2.0, mu=0.5, eta=0.4)
CIRC_R2 = RECT.with_(kind="circ")
CIRC = LawParams(alpha=1.0, r0=1.0, mu=0.5, eta=0.4, kind="circ")
RUNS = 100


def _warm():
    run_scenario(Scenario(n=2, law=RECT, T=0.1))
    run_scenario(Scenario(n=10, law=RECT, T=0.1))


def _random_state(rng, box=4.0):
    return FramedState.from_frame(rng.uniform(-box / 2, box / 2, 3), rotation(rng))


def _max_abs(a, b):
    return float(np.max(np.abs(np.asarray(a, dtype=float) - np.asarray(b, dtype=float))))


def criterion_1():
    _warm()
    start = time.perf_counter()
    traj, _ = run_scenario(Scenario(n=2, law=RECT, dt=1e-2, T=1000.0, seed=0, sample_every=100))
    elapsed = time.perf_counter() - start
    err = frame_error(traj.frames)
    ticks = int(round(traj.t[-1] / 1e-2))
    ok = ticks == 100_000 and err <= 1e-10 and elapsed < 5.0
    return ok, f"{ticks} steps, max frame error {err:.2e}, {elapsed:.2f} s"


def criterion_2():
    start = time.perf_counter()
    checks = [c for c in rect_suite(1_000_000, seed=0) if "V-dot" not in c.name] + circ_suite(1_000_000, seed=0)
    elapsed = time.perf_counter() - start
    worst = min(c.minimum for c in checks)
    ok = all(c.passed and c.samples == 1_000_000 for c in checks) and len(checks) == 7 and elapsed < 30.0
    return ok, f"{len(checks)} suites x 1e6 samples, worst LHS {worst:.2e}, {elapsed:.1f} s"


def criterion_3():
    rng = np.random.default_rng(3)
    m = 100_000
    F1, F2 = random_frames(rng, m), random_frames(rng, m)
    keep = 1.0 + np.sum(F1[:, :, 0] * F2[:, :, 0], axis=1) > 1e-9
    F1, F2 = F1[keep], F2[keep]
    r = random_units(rng, len(F1)) * rng.uniform(0.1, 6.0, size=(len(F1), 1))
    shape = ShapeTriple(r, F1[:, :, 0], F2[:, :, 0])
    frames = (Frames(*np.moveaxis(F1, -1, 0)), Frames(*np.moveaxis(F2, -1, 0)))
    vd_max = float(np.max(vdot_rect_analytic(shape, frames, RECT)))

    law = two_vehicle_law(RECT)
    h = 1e-4
    fd_err = 0.0
    for seed in range(RUNS):
        s1, s2 = random_initial_states(2, RECT, seed)
        r0 = np.stack([s1.r, s2.r])
        R0 = np.stack([s1.frame, s2.frame])
        c = law(r0, R0)
        vals = []
        for sign in (1, -1):
            rr, RR = advance(r0, R0, c, sign * h)
            vals.append(v_rect(ShapeTriple(rr[1] - rr[0], RR[0, :, 0], RR[1, :, 0]), RECT))
        fd = (vals[0] - vals[1]) / (2 * h)
        analytic = vdot_rect_analytic(ShapeTriple.from_states(s1, s2), (s1, s2), RECT)
        fd_err = max(fd_err, abs(analytic - fd))
    ok = len(F1) > 0.99 * m and vd_max <= 1e-12 and fd_err <= 1e-6
    return ok, f"max V-dot {vd_max:.2e} over {len(F1)} samples, FD error {fd_err:.2e} on {RUNS} states"


_runs = {}


def _batch(name, law, T=200.0):
    if name not in _runs:
        _warm()
        start = time.perf_counter()
        reports = [run_scenario(Scenario(n=2, law=law, dt=1e-3, T=T, seed=s))[1] for s in range(RUNS)]
        _runs[name] = (reports, time.perf_counter() - start)
    return _runs[name]


def criterion_4():
    rect, _ = _batch("rect", RECT)
    circ, _ = _batch("circ_r2", CIRC_R2)
    inc_r = max(r.max_lyapunov_increase for r in rect)
    inc_c = max(r.max_lyapunov_increase for r in circ)
    finite = all(math.isfinite(r.max_lyapunov_increase) for r in rect + circ)
    ok = finite and inc_r <= 1e-8 and inc_c <= 1e-8
    return ok, f"max increase V_rect {inc_r:.2e}, V_circ {inc_c:.2e} over {RUNS} starts each"


def criterion_5():
    reports, elapsed = _batch("rect", RECT)
    good = sum(r.terminal_class in (TerminalClass.PERPENDICULAR_BASELINE, TerminalClass.LEADER_FOLLOWER)
               for r in reports)
    min_sep = min(r.min_separation for r in reports)
    ok = good >= 95 and min_sep > 0.05 and elapsed < 120.0
    return ok, f"{good}/{RUNS} converged, min separation {min_sep:.3f}, {elapsed:.1f} s"


def criterion_6():
    reports, _ = _batch("circ_r1", CIRC)
    d = 1.0 + math.sqrt(2.0)
    good = sum(abs(r.final_separation - d) <= 0.01 * d for r in reports)
    return good >= 95, f"{good}/{RUNS} final separations within 1% of {d:.6f}"


def criterion_7():
    rng = np.random.default_rng(7)
    worst_eq = worst_id = 0.0
    specs = []
    for _ in range(1000):
        spec = EquilibriumSpec(
            w=float(rng.uniform(-3, 3)),
            a=float(rng.uniform(0, 3)),
            psi1=float(rng.uniform(-np.pi, np.pi)),
            psi2=float(rng.uniform(-np.pi, np.pi)),
            theta=float(rng.uniform(-np.pi, np.pi)),
            b3=float(rng.uniform(-3, 3)),
        )
        specs.append(spec)
        g = equilibrium_family(spec)
        worst_eq = max(worst_eq, is_shape_equilibrium(g, *spec.twists())[1])
        res = equilibrium_residuals(spec, g)
        worst_id = max(worst_id, res["rotation"], res["translation"])
    drift = 0.0
    for spec in specs[:5]:
        g = equilibrium_family(spec)
        xi1, xi2 = spec.twists()
        c = np.array([controls_from_omega(xi1.omega), controls_from_omega(xi2.omega)])
        g1 = SE3(rotation(rng), rng.uniform(-2, 2, 3))
        g2 = se3_compose(g1, g)
        r0 = np.stack([g1.translation, g2.translation])
        R0 = np.stack([g1.rotation, g2.rotation])
        _, rs, Rs, _ = integrate_arrays(r0, R0, lambda r, R: c, dt=1e-2, T=100.0, sample_every=10)
        for k in range(len(rs)):
            shape = se3_compose(se3_inverse(SE3(Rs[k, 0], rs[k, 0])), SE3(Rs[k, 1], rs[k, 1]))
            drift = max(drift, _max_abs(shape.matrix(), g.matrix()))
    ok = worst_eq <= 1e-12 and worst_id <= 1e-12 and drift <= 1e-9
    return ok, f"residual {worst_eq:.2e}, identities {worst_id:.2e}, constant-twist drift {drift:.2e}"


def criterion_8():
    cases = {
        (0.0, 0.0): FormationClass.RECTILINEAR,
        (0.0, 1.0): FormationClass.CIRCLING,
        (1.0, 0.0): FormationClass.COLLINEAR,
        (1.0, 1.0): FormationClass.HELICAL,
    }
    classes_ok = all(classify(w, a) == cls for (w, a), cls in cases.items())
    w, a = 1.0, 1.0
    c = controls_from_omega(omega_from_polar(w, a, 0.0))
    s0 = FramedState([0, 0, 0], [1, 0, 0], [0, 1, 0], [0, 0, 1])
    traj = integrate([s0], lambda r, R: np.broadcast_to(np.array(c), r.shape[:-1] + (3,)).copy(),
                     dt=1e-2, T=4 * math.pi / math.hypot(w, a), sample_every=5)
    _, radius, _ = fit_helix(traj.positions[:, 0], traj.frames[:, 0, :, 0])
    expected = a / (a * a + w * w)
    ok = classes_ok and abs(radius - expected) <= 1e-6 and helix_geometry(w, a).radius == expected
    return ok, f"four classes {'match' if classes_ok else 'differ'}, fitted radius {radius:.9f} vs {expected}"


def criterion_9():
    rng = np.random.default_rng(9)
    ctrl = v_r = v_c = 0.0
    pairs = 0
    while pairs < 10_000:
        s1, s2 = _random_state(rng), _random_state(rng)
        if np.linalg.norm(s2.r - s1.r) < 0.1:
            continue
        pairs += 1
        g1, g2 = state_to_group(s1), state_to_group(s2)
        for p in (RECT, CIRC):
            ctrl = max(ctrl, _max_abs(group_form_controls(g1, g2, p), two_vehicle_controls(s1, s2, p)))
        g = se3_compose(se3_inverse(g1), g2)
        shape = ShapeTriple.from_states(s1, s2)
        if 1.0 + s1.x @ s2.x > 1e-6:
            v_r = max(v_r, abs(v_rect_group(g, RECT) - v_rect(shape, RECT)))
        if circ_log_argument(shape) > 1e-6:
            v_c = max(v_c, abs(v_circ_group(g, CIRC) - v_circ(shape, CIRC)))
    ok = ctrl <= 1e-12 and v_r <= 1e-12 and v_c <= 1e-12
    return ok, f"{pairs} pairs: controls {ctrl:.2e}, V_rect {v_r:.2e}, V_circ {v_c:.2e}"


def criterion_10():
    rng = np.random.default_rng(10)
    worst = 0.0
    samples = 0
    while samples < 10_000:
        s1, s2 = _random_state(rng), _random_state(rng)
        if np.linalg.norm(s2.r - s1.r) < 0.1:
            continue
        p = RECT if samples % 2 == 0 else CIRC
        samples += 1
        c1, c2 = two_vehicle_controls(s1, s2, p)
        # v-steering is the u-steering with the normals relabeled (y, z) -> (z, -y)
        d1, _ = two_vehicle_controls(FramedState(s1.r, s1.x, s1.z, -s1.y), s2, p)
        worst = max(worst, abs(d1.u - c1.v), abs(d1.v + c1.u))
        # swapping the vehicles swaps the controls
        e2, e1 = two_vehicle_controls(s2, s1, p)
        worst = max(worst, _max_abs(e1, c1), _max_abs(e2, c2))
        # gauge rotation of (y1, z1) about x1 leaves the steering vector unchanged
        ang = rng.uniform(-np.pi, np.pi)
        ca, sa = math.cos(ang), math.sin(ang)
        t1 = FramedState(s1.r, s1.x, ca * s1.y + sa * s1.z, -sa * s1.y + ca * s1.z)
        h1, h2 = two_vehicle_controls(t1, s2, p)
        worst = max(worst, _max_abs(h1.u * t1.y + h1.v * t1.z, c1.u * s1.y + c1.v * s1.z), _max_abs(h2, c2))
        # common rigid motion
        Rh, th = rotation(rng), rng.uniform(-5, 5, 3)
        m1 = FramedState.from_frame(Rh @ s1.r + th, Rh @ s1.frame)
        m2 = FramedState.from_frame(Rh @ s2.r + th, Rh @ s2.frame)
        f1, f2 = two_vehicle_controls(m1, m2, p)
        worst = max(worst, _max_abs(f1 + f2, c1 + c2))
        sh, moved = ShapeTriple.from_states(s1, s2), ShapeTriple.from_states(m1, m2)
        swapped = ShapeTriple.from_states(s2, s1)
        value = v_rect if p is RECT else v_circ
        defined = (1.0 + s1.x @ s2.x > 1e-6) if p is RECT else (circ_log_argument(sh) > 1e-6)
        if defined:
            v0 = value(sh, p)
            worst = max(worst, abs(value(moved, p) - v0), abs(value(swapped, p) - v0))
    return worst <= 1e-12, f"{samples} samples, worst symmetry defect {worst:.2e}"


def criterion_11():
    _warm()
    start = time.perf_counter()
    rect_traj, rect_rep = run_scenario(Scenario(n=10, law=RECT, dt=1e-3, T=300.0, seed=0))
    circ_traj, _ = run_scenario(Scenario(n=10, law=CIRC, dt=1e-3, T=300.0, seed=0))
    elapsed = time.perf_counter() - start
    fit = fit_common_circle(circ_traj.positions[-1])
    off = max(fit.radial_deviation, fit.plane_deviation)
    ok = (
        rect_rep.alignment_metric <= 1e-2
        and rect_rep.min_separation >= 0.05 * RECT.r0
        and off <= 0.02
        and elapsed < 180.0
    )
    return ok, (
        f"rect misalignment {rect_rep.alignment_metric:.2e}, min separation {rect_rep.min_separation:.3f}; "
        f"circ off-circle {off:.2%}; {elapsed:.1f} s"
    )


CRITERIA = [
    (1, "frame integrity", criterion_1),
    (2, "inequality suites", criterion_2),
    (3, "analytic V-dot", criterion_3),
    (4, "Lyapunov monotonicity", criterion_4),
    (5, "rectilinear convergence", criterion_5),
    (6, "circling convergence", criterion_6),
    (7, "equilibrium construction", criterion_7),
    (8, "classification and helix geometry", criterion_8),
    (9, "representation equivalence", criterion_9),
    (10, "symmetry suite", criterion_10),
    (11, "multi-vehicle", criterion_11),
]


def _line(number, name, ok, detail):
    return f"{'PASS' if ok else 'FAIL'} criterion {number:2d} ({name}): {detail}"


@pytest.mark.parametrize("number,name,check", CRITERIA, ids=[f"c{n}" for n, _, _ in CRITERIA])
def test_criterion(number, name, check, capsys):
    ok, detail = check()
    with capsys.disabled():
        print("\n" + _line(number, name, ok, detail))
    assert ok, detail


if __name__ == "__main__":
    results = []
    for number, name, check in CRITERIA:
        ok, detail = check()
        results.append(ok)
        print(_line(number, name, ok, detail), flush=True)
    print(f"{sum(results)}/{len(results)} criteria passed")
    sys.exit(0 if all(results) else 1)
