"""Gyroscopically interacting unit-speed particles on SE(3)."""

from .equilibria import EquilibriumSpec, FormationClass, classify, equilibrium_family
from .framed import ControlTriple, FramedState, Trajectory, integrate, step
from .harness import RunReport, Scenario, TerminalClass, run_scenario, sweep
from .laws import LawKind, LawParams, n_vehicle_law, two_vehicle_law
from .lie import SE3, Twist, se3_exp

__version__ = "0.1.0"

__all__ = [
    "ControlTriple",
    "EquilibriumSpec",
    "FormationClass",
    "FramedState",
    "LawKind",
    "LawParams",
    "RunReport",
    "SE3",
    "Scenario",
    "TerminalClass",
    "Trajectory",
    "Twist",
    "classify",
    "equilibrium_family",
    "integrate",
    "n_vehicle_law",
    "run_scenario",
    "se3_exp",
    "step",
    "sweep",
    "two_vehicle_law",
]
