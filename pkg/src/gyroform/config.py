"""Scenario configuration files.

INI-style text with four sections plus optional per-particle sections::

    [scenario]              ; n, seed, box (cube side, in units of r0)
    n = 2
    seed = 0

    [law]                   ; kind = rect | circ | none; sign = 1 | -1
    kind = rect
    alpha = 1.0             ; 1/m
    r0 = 2.0                ; m
    mu = 0.5
    eta = 0.4

    [integration]           ; seconds
    dt = 0.001
    T = 200
    sample_every = 10
    tol = 0.001
    window = 5.0
    monitor = true

    [output]
    dir = out
    csv = true
    json = true
    svg = true
    plane = auto            ; xy | xz | yz | auto | "nx, ny, nz"

    [particle.1]            ; explicit initial state, one section per particle
    r = 0, 0, 0
    x = 1, 0, 0
    y = 0, 1, 0             ; optional normal hint; z is completed

Required keys: ``scenario.n``, ``law.kind`` and ``integration.T``.  Either
all ``n`` particle sections are given or none (random start).  Angles are
radians, lengths meters, times seconds.
"""

from __future__ import annotations

import configparser
import math
import re

import numpy as np

from .framed import FramedState, complete_frame
from .harness import OutputSpec, Scenario
from .laws import AssumptionError, LawKind, LawParams
from .lie import FrameError

PLANES = ("xy", "xz", "yz", "auto")


class ConfigError(ValueError):
    """Invalid configuration text; ``line`` is 1-based when known."""

    def __init__(self, message: str, line: int | None = None):
        super().__init__(f"line {line}: {message}" if line is not None else message)
        self.line = line


_SCHEMA = {
    "scenario": {"n": "int", "seed": "int", "box": "float"},
    "law": {
        "kind": "kind",
        "alpha": "float",
        "r0": "float",
        "mu": "float",
        "eta": "float",
        "sign": "int",
    },
    "integration": {
        "dt": "float",
        "T": "float",
        "sample_every": "int",
        "tol": "float",
        "window": "float",
        "monitor": "bool",
    },
    "output": {"dir": "str", "csv": "bool", "json": "bool", "svg": "bool", "plane": "plane"},
}
_PARTICLE_KEYS = {"r": "vec", "x": "vec", "y": "vec", "z": "vec"}
_REQUIRED = (("scenario", "n"), ("law", "kind"), ("integration", "T"))
_PARTICLE_RE = re.compile(r"particle\.(\d+)$")


def _line_of(text: str, section: str, key: str | None = None) -> int | None:
    """Best-effort line number of a section header or of a key inside it."""
    current = None
    for i, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        m = re.match(r"\[([^\]]+)\]", line)
        if m:
            current = m.group(1).strip()
            if key is None and current == section:
                return i
            continue
        if key is not None and current == section and re.match(rf"{re.escape(key)}\s*[=:]", line):
            return i
    return None


def _vector(text: str) -> np.ndarray:
    parts = [p for p in re.split(r"[,\s]+", text.strip()) if p]
    if len(parts) != 3:
        raise ValueError(f"expected three components, got {len(parts)}")
    v = np.array([float(p) for p in parts])
    if not np.all(np.isfinite(v)):
        raise ValueError("components must be finite")
    return v


def _bool(text: str) -> bool:
    low = text.strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def parse_plane(text: str):
    """``xy``/``xz``/``yz``/``auto`` or a normal vector ``"nx, ny, nz"``."""
    low = text.strip().lower()
    if low in PLANES:
        return low
    n = _vector(text)
    if np.linalg.norm(n) == 0.0:
        raise ValueError("plane normal must be nonzero")
    return ", ".join(repr(float(c)) for c in n)


def _convert(kind: str, value: str):
    if kind == "int":
        f = float(value)
        if not f.is_integer():
            raise ValueError(f"not an integer: {value!r}")
        return int(f)
    if kind == "float":
        f = float(value)
        if not math.isfinite(f):
            raise ValueError(f"not finite: {value!r}")
        return f
    if kind == "bool":
        return _bool(value)
    if kind == "kind":
        return LawKind(value.strip().lower())
    if kind == "plane":
        return parse_plane(value)
    if kind == "vec":
        return _vector(value)
    return value.strip()


def _read(text: str) -> configparser.ConfigParser:
    cp = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=(";", "#"))
    cp.optionxform = str
    try:
        cp.read_string(text)
    except configparser.MissingSectionHeaderError as exc:
        raise ConfigError("expected a [section] header", exc.lineno) from None
    except (configparser.DuplicateSectionError, configparser.DuplicateOptionError) as exc:
        raise ConfigError(exc.message.split(": ", 1)[-1], exc.lineno) from None
    except configparser.ParsingError as exc:
        line = exc.errors[0][0] if exc.errors else None
        raise ConfigError("malformed line (expected key = value)", line) from None
    return cp


def _values(cp, text):
    """Typed values per section, rejecting unknown sections and keys."""
    out: dict[str, dict] = {}
    particles: dict[int, dict] = {}
    for section in cp.sections():
        m = _PARTICLE_RE.match(section)
        schema = _PARTICLE_KEYS if m else _SCHEMA.get(section)
        if schema is None:
            raise ConfigError(f"unknown section [{section}]", _line_of(text, section))
        typed = {}
        for key, raw in cp.items(section):
            if key not in schema:
                raise ConfigError(f"unknown key {key!r} in [{section}]", _line_of(text, section, key))
            try:
                typed[key] = _convert(schema[key], raw)
            except ValueError as exc:
                raise ConfigError(f"[{section}] {key}: {exc}", _line_of(text, section, key)) from None
        if m:
            idx = int(m.group(1))
            if idx < 1:
                raise ConfigError("particle sections are numbered from 1", _line_of(text, section))
            particles[idx] = typed
        else:
            out[section] = typed
    for section, key in _REQUIRED:
        if key not in out.get(section, {}):
            raise ConfigError(f"missing required key {key!r} in [{section}]", _line_of(text, section))
    return out, particles


def _particle_state(idx: int, vals: dict, text: str) -> FramedState:
    where = _line_of(text, f"particle.{idx}")
    for key in ("r", "x"):
        if key not in vals:
            raise ConfigError(f"[particle.{idx}] needs {key!r}", where)
    try:
        if "z" in vals:
            if "y" not in vals:
                raise FrameError("z given without y")
            s = FramedState(vals["r"], vals["x"], vals["y"], vals["z"])
            s.check()
            return s
        F = complete_frame(vals["x"], vals.get("y"))
        return FramedState.from_frame(vals["r"], F)
    except (FrameError, ValueError) as exc:
        raise ConfigError(f"[particle.{idx}] {exc}", where) from None


def parse_config(text: str) -> Scenario:
    """Validated ``Scenario`` from configuration text.

    Raises ``ConfigError`` for syntax, unknown keys, missing keys and
    constraint violations (the message for A4 says so).
    """
    cp = _read(text)
    vals, particles = _values(cp, text)
    sc_vals = vals.get("scenario", {})
    integ = vals.get("integration", {})
    try:
        law = LawParams(**vals.get("law", {}))
    except AssumptionError as exc:
        raise ConfigError(str(exc), _line_of(text, "law")) from None
    out_vals = dict(vals.get("output", {}))
    if "dir" in out_vals:
        out_vals["directory"] = out_vals.pop("dir")
    output = OutputSpec(**out_vals)

    n = sc_vals["n"]
    init = None
    if particles:
        if sorted(particles) != list(range(1, n + 1)):
            raise ConfigError(f"particle sections must be exactly particle.1 .. particle.{n}")
        init = tuple(_particle_state(i, particles[i], text) for i in range(1, n + 1))
    try:
        return Scenario(
            n=n,
            law=law,
            init=init,
            output=output,
            **{k: v for k, v in sc_vals.items() if k != "n"},
            **integ,
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


def _fmt(x) -> str:
    if isinstance(x, bool):
        return "true" if x else "false"
    if isinstance(x, float):
        return repr(x)
    return str(x)


def _vec(v) -> str:
    return ", ".join(repr(float(c)) for c in v)


def emit_config(sc: Scenario) -> str:
    """Canonical text for ``sc``; ``parse_config(emit_config(sc)) == sc``."""
    lines = [
        "[scenario]",
        f"n = {sc.n}",
        f"seed = {sc.seed}",
        f"box = {_fmt(float(sc.box))}",
        "",
        "[law]",
        f"kind = {sc.law.kind.value}",
    ]
    for key in ("alpha", "r0", "mu", "eta"):
        lines.append(f"{key} = {_fmt(float(getattr(sc.law, key)))}")
    lines += [f"sign = {sc.law.sign}", "", "[integration]"]
    for key in ("dt", "T", "tol", "window"):
        lines.append(f"{key} = {_fmt(float(getattr(sc, key)))}")
    lines += [f"sample_every = {sc.sample_every}", f"monitor = {_fmt(sc.monitor)}", "", "[output]"]
    o = sc.output
    lines += [
        f"dir = {o.directory}",
        f"csv = {_fmt(o.csv)}",
        f"json = {_fmt(o.json)}",
        f"svg = {_fmt(o.svg)}",
        f"plane = {o.plane}",
    ]
    for i, s in enumerate(sc.init or (), start=1):
        lines += [
            "",
            f"[particle.{i}]",
            f"r = {_vec(s.r)}",
            f"x = {_vec(s.x)}",
            f"y = {_vec(s.y)}",
            f"z = {_vec(s.z)}",
        ]
    return "\n".join(lines) + "\n"


def load_config(path) -> Scenario:
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc.strerror}") from None
    return parse_config(text)
