"""Command line: simulate, equilibria, verify, sweep.

Exit codes: 0 success, 1 invalid input (usage, config, parameters),
2 runtime failure.
"""

from __future__ import annotations

import argparse
import configparser
import csv
import io
import math
import sys

from .config import ConfigError, load_config, parse_config
from .equilibria import (
    EquilibriumSpec,
    FormationClass,
    classify,
    equilibrium_residuals,
    helix_geometry,
)
from .framed import IntegrationError
from .harness import LAW_FIELDS, SCENARIO_FIELDS, run_scenario, sweep
from .laws import AssumptionError, CollisionError
from .serialize import report_dict, write_outputs
from .verify import SUITES, all_passed, run_suites

EXIT_OK = 0
EXIT_INVALID = 1
EXIT_RUNTIME = 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(f"{self.prog}: error: {message}")


def _fmt(x) -> str:
    if isinstance(x, float):
        return "-" if not math.isfinite(x) else f"{x:.12g}"
    return str(x)


def cmd_simulate(args) -> int:
    sc = load_config(args.config)
    traj, report = run_scenario(sc)
    paths = write_outputs(traj, report, sc.output, args.out)
    for key, val in report_dict(report).items():
        print(f"{key}: {val}")
    for p in paths:
        print(f"wrote {p}")
    return EXIT_OK


EQ_COLUMNS = ("w", "a", "psi1", "psi2", "theta", "b3", "class", "radius", "pitch", "residual")


def _equilibrium_row(spec: EquilibriumSpec) -> list:
    cls = classify(spec.w, spec.a)
    if cls == FormationClass.RECTILINEAR:
        radius = pitch = math.inf
    else:
        geo = helix_geometry(spec.w, spec.a, spec.psi1)
        radius, pitch = geo.radius, geo.pitch_rate
    residual = max(equilibrium_residuals(spec).values())
    return [spec.w, spec.a, spec.psi1, spec.psi2, spec.theta, spec.b3, cls.value, radius, pitch, residual]


def _specs_from_file(path):
    """CSV with a header naming any of w, a, psi1, psi2, theta, b3."""
    try:
        with open(path, encoding="utf-8", newline="") as fh:
            rows = list(csv.DictReader(fh))
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc.strerror}") from None
    specs = []
    for i, row in enumerate(rows, start=2):
        unknown = set(row) - set(EQ_COLUMNS[:6])
        if unknown:
            raise ConfigError(f"unknown columns {sorted(unknown)}", i)
        try:
            specs.append(EquilibriumSpec(**{k: float(v) for k, v in row.items()}))
        except (TypeError, ValueError) as exc:
            raise ConfigError(str(exc), i) from None
    return specs


def cmd_equilibria(args) -> int:
    if args.sweep:
        specs = _specs_from_file(args.sweep)
    else:
        if args.w is None or args.a is None:
            raise UsageError("equilibria: --w and --a are required unless --sweep is given")
        specs = [EquilibriumSpec(args.w, args.a, args.psi1, args.psi2, args.theta, args.b3)]
    print(",".join(EQ_COLUMNS))
    for spec in specs:
        print(",".join(_fmt(v) for v in _equilibrium_row(spec)))
    return EXIT_OK


def cmd_verify(args) -> int:
    checks = run_suites(args.suite, args.samples, args.seed, args.algebra_samples)
    for c in checks:
        print(c.line())
    ok = all_passed(checks)
    print(f"{sum(c.passed for c in checks)}/{len(checks)} checks passed")
    return EXIT_OK if ok else EXIT_RUNTIME


def _parse_list(text: str):
    items = [t.strip() for t in text.split(",") if t.strip()]
    out = []
    for t in items:
        try:
            f = float(t)
            out.append(int(f) if f.is_integer() and "." not in t and "e" not in t.lower() else f)
        except ValueError:
            out.append(t)
    return out


def _parse_seeds(text: str) -> list[int]:
    text = text.strip()
    if ":" in text:
        lo, hi = (int(v) for v in text.split(":"))
        return list(range(lo, hi))
    return [int(v) for v in _parse_list(text)]


def load_sweep(path):
    """A scenario config plus a ``[sweep]`` section of comma-separated value lists.

    ``seeds`` is ``lo:hi`` or a list; every other key must be a law or
    scenario field.
    """
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc.strerror}") from None
    cp = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=(";", "#"))
    cp.optionxform = str
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(str(exc).splitlines()[0], getattr(exc, "lineno", None)) from None
    if not cp.has_section("sweep"):
        raise ConfigError("sweep file needs a [sweep] section")
    grid = {}
    seeds = [0]
    for key, raw in cp.items("sweep"):
        if key == "seeds":
            seeds = _parse_seeds(raw)
        elif key in LAW_FIELDS or key in SCENARIO_FIELDS:
            grid[key] = _parse_list(raw)
        else:
            raise ConfigError(f"unknown sweep key {key!r}")
    cp.remove_section("sweep")
    buf = io.StringIO()
    cp.write(buf)
    return parse_config(buf.getvalue()), grid, seeds


SWEEP_COLUMNS = ("index", "params", "seed", "converged", "terminalClass", "finalSeparation", "minSeparation", "error")


def cmd_sweep(args) -> int:
    base, grid, seeds = load_sweep(args.grid)
    result = sweep(base, grid, seeds, workers=args.workers)
    print(",".join(SWEEP_COLUMNS))
    for row in result.rows:
        params = ";".join(f"{k}={v}" for k, v in row.params.items())
        if row.report is None:
            cells = [row.index, params, row.seed, "", "", "", "", row.error]
        else:
            r = row.report
            cells = [row.index, params, row.seed, r.converged, r.terminal_class.value,
                     r.final_separation, r.min_separation, ""]
        print(",".join(_fmt(c) for c in cells))
    for name, frac in result.fractions().items():
        print(f"# {name}: {frac:.3f}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="gyroform", description="Steering laws for unit-speed particles on SE(3).")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("simulate", help="run a scenario config and write CSV/JSON/SVG")
    p.add_argument("config")
    p.add_argument("--out", default=None, help="output directory (overrides [output] dir)")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("equilibria", help="classify and check relative equilibria")
    p.add_argument("--w", type=float)
    p.add_argument("--a", type=float)
    p.add_argument("--psi1", type=float, default=0.0)
    p.add_argument("--psi2", type=float, default=0.0)
    p.add_argument("--theta", type=float, default=0.0)
    p.add_argument("--b3", type=float, default=0.0)
    p.add_argument("--sweep", default=None, help="CSV of specs (columns w,a,psi1,psi2,theta,b3)")
    p.set_defaults(func=cmd_equilibria)

    p = sub.add_parser("verify", help="sampled inequality and identity suites")
    p.add_argument("--suite", choices=SUITES + ("all",), default="all")
    p.add_argument("--samples", type=int, default=None, help="inequality samples (default 1e6)")
    p.add_argument("--algebra-samples", type=int, default=None, help="identity samples (default 1000)")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("sweep", help="run a parameter grid over seeds")
    p.add_argument("grid")
    p.add_argument("--workers", type=int, default=1)
    p.set_defaults(func=cmd_sweep)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_INVALID
    except (IntegrationError, CollisionError, OSError, RuntimeError) as exc:
        print(f"runtime error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    except (ConfigError, AssumptionError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
