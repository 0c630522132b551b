"""Discrete energies and their negative nodal gradients."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from curveflow import _kernels as K
from curveflow.errors import DegenerateSegment
from curveflow.geometry import ClosedCurve, OpenChain, segment_lengths


@dataclass(frozen=True)
class PenaltyConfig:
    """Mesh-uniformity penalty ``delta * sum((l_i / l_{i+1} - 1)**2)``."""

    enabled: bool = True
    delta: float | None = None

    def __post_init__(self):
        if self.delta is not None and self.delta < 0:
            raise ValueError("delta must be >= 0")
        if self.enabled and self.delta is not None and self.delta == 0:
            raise ValueError("an enabled penalty needs delta > 0")

    @classmethod
    def off(cls) -> PenaltyConfig:
        return cls(enabled=False, delta=0.0)

    def resolve(self, n_nodes: int, closed: bool) -> float:
        """Effective delta; defaults to 1/n (closed) or 1/(n-2) (open)."""
        if not self.enabled:
            return 0.0
        if self.delta is not None:
            return float(self.delta)
        return 1.0 / n_nodes if closed else 1.0 / (n_nodes - 2)


@dataclass(frozen=True)
class WettingPhysics:
    gamma: float = 1.0
    theta_y: float = math.pi / 2
    xi0: float = 1.0
    xi1: float = 1.0

    def __post_init__(self):
        if not (self.gamma > 0 and self.xi0 > 0 and self.xi1 > 0):
            raise ValueError("gamma, xi0 and xi1 must be positive")
        if not 0.0 < self.theta_y < math.pi:
            raise ValueError("theta_y must lie strictly inside (0, pi)")


def _ratio_penalty(lengths: np.ndarray, delta: float, cyclic: bool) -> float:
    if delta == 0.0:
        return 0.0
    if lengths.min() <= K.EPS_GEOM:
        raise DegenerateSegment("segment length below tolerance in penalty term")
    nxt = np.roll(lengths, -1) if cyclic else lengths[1:]
    cur = lengths if cyclic else lengths[:-1]
    return float(delta * np.sum((cur / nxt - 1.0) ** 2))


def energy_closed(curve: ClosedCurve) -> float:
    return float(np.sum(segment_lengths(curve)))


def energy_closed_penalized(curve: ClosedCurve, pc: PenaltyConfig) -> float:
    lengths = segment_lengths(curve)
    delta = pc.resolve(curve.n, closed=True)
    return float(np.sum(lengths)) + _ratio_penalty(lengths, delta, cyclic=True)


def grad_closed(curve: ClosedCurve, pc: PenaltyConfig) -> np.ndarray:
    """Nodal forces ``-dE/dx_i`` of the (penalized) length, shape (n, 2)."""
    x = curve.nodes
    lengths, tangents = K.segments(x, True)
    if lengths.min() <= K.EPS_GEOM:
        raise DegenerateSegment("zero-length segment")
    s = K.length_weights(lengths, True, pc.resolve(curve.n, closed=True), 1.0)
    return K.forces_closed(tangents, s)


def energy_wetting(chain: OpenChain, wp: WettingPhysics) -> float:
    """Droplet energy with the additive substrate constant set to zero."""
    x = chain.nodes
    base = x[0, 0] - x[-1, 0]
    return float(wp.gamma * (np.sum(segment_lengths(chain)) - base * math.cos(wp.theta_y)))


def energy_wetting_penalized(chain: OpenChain, wp: WettingPhysics, pc: PenaltyConfig) -> float:
    lengths = segment_lengths(chain)
    delta = pc.resolve(chain.n, closed=False)
    return energy_wetting(chain, wp) + _ratio_penalty(lengths, delta, cyclic=False)


def grad_wetting(chain: OpenChain, wp: WettingPhysics, pc: PenaltyConfig) -> np.ndarray:
    """Nodal forces for the droplet; endpoint rows keep only the x-component."""
    x = chain.nodes
    lengths, tangents = K.segments(x, False)
    if lengths.min() <= K.EPS_GEOM:
        raise DegenerateSegment("zero-length segment")
    s = K.length_weights(lengths, False, pc.resolve(chain.n, closed=False), wp.gamma)
    return K.forces_open(tangents, s, wp.gamma * math.cos(wp.theta_y))

