"""Reference solutions, error measures and diagnostics."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import shapely
from shapely.geometry import Polygon

from curveflow.assembly import SaddleSystem
from curveflow.energy import WettingPhysics, energy_wetting
from curveflow.errors import ClippingFailure, ExtinctionReached
from curveflow.geometry import ClosedCurve, Curve, OpenChain
from curveflow.linsolve import VelocityState

CAP_NODES = 16384


@dataclass(frozen=True)
class DiagnosticsRecord:
    t: float
    energy: float
    penalized_energy: float
    dissipation: float
    area: float
    mri: float
    lam: float = math.nan
    theta_right: float = math.nan
    theta_left: float = math.nan

    FIELDS = ("t", "energy", "penalized_energy", "dissipation", "area", "mri",
              "lambda", "theta_right", "theta_left")

    def row(self) -> tuple[float, ...]:
        return (self.t, self.energy, self.penalized_energy, self.dissipation, self.area,
                self.mri, self.lam, self.theta_right, self.theta_left)


@dataclass(frozen=True)
class ConvergenceRow:
    n: int
    err: float
    order: float = math.nan


@dataclass(frozen=True, eq=False)
class CapSolution:
    r: float
    energy: float
    polygon: OpenChain
    theta_y: float
    area: float


def exact_circle(r0: float, t: float) -> float:
    """Radius of a circle shrinking under curve shortening flow."""
    if t >= 0.5 * r0 * r0:
        raise ExtinctionReached(f"t={t} is past the collapse time {0.5 * r0 * r0}")
    return math.sqrt(r0 * r0 - 2.0 * t)


def _closest_to_origin(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    d = b - a
    mu = np.clip(-np.sum(a * d, axis=1) / np.sum(d * d, axis=1), 0.0, 1.0)
    return a + mu[:, None] * d


def err1(curve: ClosedCurve, rho: float, sampling: str = "nodes", samples: int = 64) -> float:
    """Max distance to the origin-centred circle of radius ``rho``.

    ``sampling="nodes"`` measures at the nodes only. ``"polyline"`` also
    uses ``samples`` points per segment plus each segment's point closest
    to the origin, which captures the chord sagitta.
    """
    x = curve.nodes
    pts = [x]
    if sampling == "polyline":
        a = x
        b = np.roll(x, -1, axis=0)
        mu = np.arange(1, samples) / samples
        pts.append((a[:, None, :] * (1 - mu)[None, :, None] + b[:, None, :] * mu[None, :, None]).reshape(-1, 2))
        pts.append(_closest_to_origin(a, b))
    elif sampling != "nodes":
        raise ValueError(f"unknown sampling {sampling!r}")
    p = np.concatenate(pts)
    return float(np.abs(np.hypot(p[:, 0], p[:, 1]) - rho).max())


def order(rows) -> list[ConvergenceRow]:
    """Observed convergence orders between consecutive ``(n, err)`` rows."""
    rows = [(int(n), float(e)) for n, e in rows]
    if len(rows) < 2:
        raise ValueError("need at least two rows")
    out = [ConvergenceRow(rows[0][0], rows[0][1])]
    for (n0, e0), (n1, e1) in zip(rows, rows[1:]):
        if n1 <= n0:
            raise ValueError("n must increase")
        out.append(ConvergenceRow(n1, e1, math.log(e0 / e1) / math.log(n1 / n0)))
    return out


def cap_radius(area: float, theta_y: float) -> float:
    return math.sqrt(area / (theta_y - math.sin(theta_y) * math.cos(theta_y)))


def exact_cap(area: float, theta_y: float, m: int = CAP_NODES, center: float = 0.0) -> CapSolution:
    """Stationary droplet: circular cap of given area meeting y = 0 at theta_y (gamma = 1)."""
    if area <= 0 or not 0 < theta_y < math.pi:
        raise ValueError("need area > 0 and theta_y in (0, pi)")
    r = cap_radius(area, theta_y)
    phi = np.linspace(0.5 * math.pi - theta_y, 0.5 * math.pi + theta_y, m)
    nodes = np.column_stack([center + r * np.cos(phi), -r * math.cos(theta_y) + r * np.sin(phi)])
    nodes[0, 1] = 0.0
    nodes[-1, 1] = 0.0
    return CapSolution(r, 2.0 * area / r, OpenChain(nodes), theta_y, area)


def err2(chain: OpenChain, cap_energy: float, theta_y: float, gamma: float = 1.0) -> float:
    wp = WettingPhysics(gamma=gamma, theta_y=theta_y)
    return abs(energy_wetting(chain, wp) - cap_energy)


def _polygon(curve: Curve) -> Polygon:
    poly = Polygon(curve.nodes)
    if not poly.is_valid:
        raise ClippingFailure(f"region is not a simple polygon: {shapely.is_valid_reason(poly)}")
    return poly


def symmetric_difference_area(a: Curve, b: Curve) -> float:
    """|A| + |B| - 2|A n B| for the regions bounded by two curves."""
    pa, pb = _polygon(a), _polygon(b)
    return float(pa.area + pb.area - 2.0 * pa.intersection(pb).area)


def base_midpoint(chain: OpenChain) -> float:
    return 0.5 * float(chain.nodes[0, 0] + chain.nodes[-1, 0])


def err3(chain: OpenChain, cap: CapSolution) -> float:
    """Manifold distance to the cap, re-centred on the droplet's base midpoint."""
    shift = base_midpoint(chain) - base_midpoint(cap.polygon)
    aligned = OpenChain(cap.polygon.nodes + np.array([shift, 0.0]))
    return symmetric_difference_area(chain, aligned)


def dissipation(system: SaddleSystem, v: VelocityState) -> float:
    return 0.5 * system.quadratic_form(v.velocities)
