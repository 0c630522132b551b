"""Direct solution of the assembled mobility systems.

The structured path splits the block system into one scalar (cyclic)
tridiagonal system per coordinate, handles the cyclic corner with a
Sherman-Morrison correction and the area constraint through its Schur
complement. ``solve_dense`` is a plain LU fallback used for checking.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from curveflow import _kernels as K
from curveflow.assembly import SaddleSystem
from curveflow.errors import SingularSystem


@dataclass(frozen=True, eq=False)
class VelocityState:
    velocities: np.ndarray
    multiplier: float | None = None

    def vmax(self) -> float:
        return float(np.abs(self.velocities).max())


@dataclass(frozen=True)
class SolveReport:
    residual_inf: float
    pivot_min: float
    constraint_residual: float = 0.0


def _report(system: SaddleSystem, v: np.ndarray, lam: float, pivot: float) -> SolveReport:
    res = system.apply(v, lam if system.bordered else math.nan) - system.rhs
    con = abs(float(np.sum(system.border * v))) if system.bordered else 0.0
    return SolveReport(float(np.abs(res).max()), pivot, con)


def solve(system: SaddleSystem) -> tuple[VelocityState, SolveReport]:
    border = system.border if system.bordered else np.zeros_like(system.diag)
    v, lam, prel = K.solve_structured(
        np.ascontiguousarray(system.diag),
        np.ascontiguousarray(system.off),
        np.ascontiguousarray(border),
        np.ascontiguousarray(system.rhs),
        system.cyclic,
        system.bordered,
    )
    if not prel >= K.PIVOT_TOL:
        raise SingularSystem(f"relative pivot {prel:.3e} below {K.PIVOT_TOL:g}")
    report = _report(system, v, lam, prel)
    state = VelocityState(v, float(lam) if system.bordered else None)
    return state, report


def solve_dense(system: SaddleSystem) -> tuple[VelocityState, SolveReport]:
    a, g = system.dense()
    scale = np.abs(a).max()
    try:
        sol = np.linalg.solve(a, g)
    except np.linalg.LinAlgError as exc:
        raise SingularSystem(str(exc)) from exc
    n = system.n
    v = sol[: 2 * n].reshape(n, 2)
    lam = float(sol[-1]) if system.bordered else None
    # smallest singular value relative to scale stands in for the pivot
    pivot = float(np.linalg.svd(a, compute_uv=False).min() / scale)
    if pivot < K.PIVOT_TOL:
        raise SingularSystem(f"relative pivot {pivot:.3e} below {K.PIVOT_TOL:g}")
    return VelocityState(v, lam), _report(system, v, math.nan if lam is None else lam, pivot)
