"""Moving-node variational schemes for planar curvature flows."""

from curveflow.energy import PenaltyConfig, WettingPhysics
from curveflow.geometry import ClosedCurve, OpenChain
from curveflow.integrator import FlowProblem, StepControls, Trajectory, run, step, velocity

__all__ = [
    "ClosedCurve",
    "OpenChain",
    "PenaltyConfig",
    "WettingPhysics",
    "FlowProblem",
    "StepControls",
    "Trajectory",
    "run",
    "step",
    "velocity",
]
