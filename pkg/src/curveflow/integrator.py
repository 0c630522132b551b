"""Improved Euler (Heun) time stepping and trajectory recording."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from curveflow import _kernels as K
from curveflow.assembly import SaddleSystem, assemble_mcf, assemble_volume, assemble_wetting
from curveflow.energy import (
    PenaltyConfig,
    WettingPhysics,
    energy_closed,
    energy_closed_penalized,
    energy_wetting,
    energy_wetting_penalized,
)
from curveflow.errors import CurveFlowError, DegenerateSegment, SingularSystem
from curveflow.geometry import (
    ClosedCurve,
    Curve,
    contact_angles,
    enclosed_area,
    mesh_ratio,
    validate,
)
from curveflow.linsolve import VelocityState, solve
from curveflow.metrics import DiagnosticsRecord, dissipation

logger = logging.getLogger("curveflow")

KINDS = {"mcf": K.MCF, "mcf_volume": K.MCF_VOLUME, "wetting": K.WETTING}


@dataclass(frozen=True)
class FlowProblem:
    kind: str = "mcf"
    physics: WettingPhysics = field(default_factory=WettingPhysics)
    penalty: PenaltyConfig = field(default_factory=PenaltyConfig)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown flow kind {self.kind!r}")

    @property
    def code(self) -> int:
        return KINDS[self.kind]

    @property
    def closed(self) -> bool:
        return self.kind != "wetting"

    def check_curve(self, curve: Curve) -> None:
        if self.closed != isinstance(curve, ClosedCurve):
            want = "ClosedCurve" if self.closed else "OpenChain"
            raise TypeError(f"{self.kind} needs a {want}, got {type(curve).__name__}")

    def kernel_args(self, n_nodes: int) -> tuple:
        delta = self.penalty.resolve(n_nodes, closed=self.closed)
        if self.closed:
            return (self.code, delta, 1.0, 0.0, 1.0, 1.0)
        p = self.physics
        return (self.code, delta, p.gamma, math.cos(p.theta_y), p.xi0, p.xi1)


@dataclass(frozen=True)
class StepControls:
    dt: float
    t_end: float
    record_stride: int = 1
    stationary_tol: float = 0.0
    # halve dt when the penalized energy rises by more than 1e-10; 0 disables
    max_halvings: int = 0

    def __post_init__(self):
        if not self.dt > 0 or not self.t_end > 0:
            raise ValueError("dt and t_end must be positive")
        if self.dt >= self.t_end:
            raise ValueError("dt must be smaller than t_end")
        if self.record_stride < 1:
            raise ValueError("record_stride must be >= 1")
        if self.stationary_tol < 0:
            raise ValueError("stationary_tol must be >= 0")


@dataclass
class Trajectory:
    times: list[float] = field(default_factory=list)
    curves: list[Curve] = field(default_factory=list)
    records: list[DiagnosticsRecord] = field(default_factory=list)
    status: str = "running"
    steps: int = 0
    error: str | None = None
    # worst values over every state the solver evaluated
    worst_identity: float = 0.0
    worst_constraint: float = 0.0
    min_dissipation: float = math.inf

    @property
    def final(self) -> Curve:
        return self.curves[-1]

    def append(self, t: float, curve: Curve, record: DiagnosticsRecord) -> None:
        if self.times and t <= self.times[-1]:
            return
        self.times.append(t)
        self.curves.append(curve)
        self.records.append(record)


def assemble(problem: FlowProblem, curve: Curve) -> SaddleSystem:
    problem.check_curve(curve)
    if problem.kind == "mcf":
        return assemble_mcf(curve, problem.penalty)
    if problem.kind == "mcf_volume":
        return assemble_volume(curve, problem.penalty)
    return assemble_wetting(curve, problem.physics, problem.penalty)


def velocity(problem: FlowProblem, curve: Curve) -> VelocityState:
    state, _ = solve(assemble(problem, curve))
    return state


def stationarity(state: VelocityState) -> float:
    return state.vmax()


def energies(problem: FlowProblem, curve: Curve) -> tuple[float, float]:
    """(plain energy, penalized energy)."""
    if problem.closed:
        return energy_closed(curve), energy_closed_penalized(curve, problem.penalty)
    return (energy_wetting(curve, problem.physics),
            energy_wetting_penalized(curve, problem.physics, problem.penalty))


def diagnose(problem: FlowProblem, curve: Curve, t: float) -> DiagnosticsRecord:
    system = assemble(problem, curve)
    state, _ = solve(system)
    e, ep = energies(problem, curve)
    lam = state.multiplier if state.multiplier is not None else math.nan
    th_r = th_l = math.nan
    if not problem.closed:
        th_r, th_l = contact_angles(curve)
    return DiagnosticsRecord(t, e, ep, dissipation(system, state), enclosed_area(curve),
                             mesh_ratio(curve), lam, th_r, th_l)


def _raise_status(status: int) -> None:
    if status == K.DEGENERATE:
        raise DegenerateSegment("segment collapsed or region inverted during time stepping (dt too large?)")
    if status == K.SINGULAR:
        raise SingularSystem("mobility system became singular during time stepping")


def _advance(problem, curve, dt, nsteps, stat_tol):
    args = problem.kernel_args(curve.n)
    return K.advance(np.ascontiguousarray(curve.nodes), *args, dt, nsteps, stat_tol)


def step(problem: FlowProblem, curve: Curve, dt: float) -> Curve:
    """One predictor-corrector step; multipliers are not integrated."""
    problem.check_curve(curve)
    x, done, status, *_ = _advance(problem, curve, dt, 1, -1.0)
    _raise_status(status)
    return curve.with_nodes(x)


def run(problem: FlowProblem, initial: Curve, controls: StepControls) -> Trajectory:
    """Integrate from ``initial`` until ``t_end`` or stationarity.

    Diagnostics are recorded at t = 0, every ``record_stride`` steps and at
    the final state. A collapse or singular solve stops the run with the
    last valid state kept in the trajectory (``status`` says why).
    """
    problem.check_curve(initial)
    validate(initial)
    traj = Trajectory()
    dt = controls.dt
    total = max(1, int(round(controls.t_end / dt)))
    if total * dt < controls.t_end * (1 - 1e-12):
        total += 1
    guard = controls.max_halvings > 0
    t_stop = controls.t_end * (1 - 1e-12)
    curve, t = initial, 0.0
    traj.append(t, curve, diagnose(problem, curve, t))
    done = since_record = halvings = 0
    while t < t_stop:
        nsteps = 1 if guard else min(controls.record_stride - since_record, total - done)
        x, taken, status, vmax, w_id, w_con, min_phi = _advance(
            problem, curve, dt, nsteps, controls.stationary_tol)
        traj.worst_identity = max(traj.worst_identity, w_id)
        traj.worst_constraint = max(traj.worst_constraint, w_con)
        traj.min_dissipation = min(traj.min_dissipation, min_phi)
        new_curve = curve.with_nodes(x)
        if guard and taken == 1 and energies(problem, new_curve)[1] > energies(problem, curve)[1] + 1e-10:
            if halvings >= controls.max_halvings:
                traj.status = "energy_increase"
                traj.error = f"energy rose at t={t:.6g} after {halvings} halvings"
                break
            halvings += 1
            dt *= 0.5
            logger.info("energy increase at t=%.6g, dt -> %.3g", t, dt)
            continue
        done += taken
        since_record += taken
        traj.steps += taken
        t = t + taken * dt if guard else done * dt
        curve = new_curve
        if status == K.STATIONARY:
            traj.status = "stationary"
            break
        if status != K.OK:
            traj.status = "degenerate" if status == K.DEGENERATE else "singular"
            traj.error = f"stopped at t={t:.6g}"
            logger.warning("run aborted: %s at t=%.6g", traj.status, t)
            break
        if since_record >= controls.record_stride:
            traj.append(t, curve, diagnose(problem, curve, t))
            since_record = 0
    else:
        traj.status = "completed"
    try:
        traj.append(t, curve, diagnose(problem, curve, t))
    except CurveFlowError as exc:
        traj.error = traj.error or str(exc)
    return traj
