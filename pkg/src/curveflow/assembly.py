"""Assembly of the mobility systems for the three flows.

The block matrices are stored structurally. Every 2x2 block is diagonal,
so ``diag[i]`` holds the two diagonal entries of block (i, i) and
``off[k]`` those of the coupling block between nodes k and k + 1 (the
last entry of a cyclic system couples node n - 1 back to node 0).
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from curveflow import _kernels as K
from curveflow.energy import PenaltyConfig, WettingPhysics
from curveflow.errors import DegenerateSegment
from curveflow.geometry import ClosedCurve, OpenChain


@dataclass(frozen=True, eq=False)
class SaddleSystem:
    diag: np.ndarray
    off: np.ndarray
    rhs: np.ndarray
    border: np.ndarray | None = None
    cyclic: bool = True

    @property
    def n(self) -> int:
        return self.diag.shape[0]

    @property
    def bordered(self) -> bool:
        return self.border is not None

    def block_dense(self) -> np.ndarray:
        """Dense 2n x 2n block part, unknowns ordered (x1, y1, x2, y2, ...)."""
        n = self.n
        a = np.zeros((2 * n, 2 * n))
        for i in range(n):
            for c in range(2):
                a[2 * i + c, 2 * i + c] = self.diag[i, c]
        for k in range(self.off.shape[0]):
            j = (k + 1) % n
            for c in range(2):
                a[2 * k + c, 2 * j + c] += self.off[k, c]
                a[2 * j + c, 2 * k + c] += self.off[k, c]
        return a

    def dense(self) -> tuple[np.ndarray, np.ndarray]:
        """Full matrix and right-hand side, bordered if applicable."""
        a = self.block_dense()
        g = self.rhs.reshape(-1)
        if not self.bordered:
            return a, g.copy()
        m = a.shape[0]
        full = np.zeros((m + 1, m + 1))
        full[:m, :m] = a
        full[:m, m] = self.border.reshape(-1)
        full[m, :m] = self.border.reshape(-1)
        return full, np.append(g, 0.0)

    def quadratic_form(self, velocities: np.ndarray) -> float:
        return float(K.quad_form(self.diag, self.off, np.ascontiguousarray(velocities, dtype=float)))

    def apply(self, velocities: np.ndarray, multiplier: float = math.nan) -> np.ndarray:
        border = self.border if self.bordered else np.zeros_like(self.diag)
        return K.matvec(self.diag, self.off, border, np.ascontiguousarray(velocities, dtype=float),
                        multiplier, self.cyclic)

    def dump_csv(self, path: str | Path) -> None:
        """Write ``i,d,c,bx,by,gx,gy`` rows (first-component d and c)."""
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["i", "d", "c", "bx", "by", "gx", "gy"])
            for i in range(self.n):
                c = repr(float(self.off[i, 0])) if i < self.off.shape[0] else ""
                bx, by = (self.border[i] if self.bordered else (0.0, 0.0))
                w.writerow([i + 1, repr(float(self.diag[i, 0])), c, repr(float(bx)), repr(float(by)),
                            repr(float(self.rhs[i, 0])), repr(float(self.rhs[i, 1]))])


def _lengths(x: np.ndarray, closed: bool) -> tuple[np.ndarray, np.ndarray]:
    lengths, tangents = K.segments(x, closed)
    if lengths.min() <= K.EPS_GEOM:
        raise DegenerateSegment(f"segment {int(np.argmin(lengths))} collapsed")
    return lengths, tangents


def _closed_system(curve: ClosedCurve, pc: PenaltyConfig, bordered: bool) -> SaddleSystem:
    x = curve.nodes
    lengths, tangents = _lengths(x, True)
    s = K.length_weights(lengths, True, pc.resolve(curve.n, closed=True), 1.0)
    g = K.forces_closed(tangents, s)
    diag, off, border = K.assemble_closed(x, lengths)
    return SaddleSystem(diag, off, g, border if bordered else None, cyclic=True)


def assemble_mcf(curve: ClosedCurve, pc: PenaltyConfig) -> SaddleSystem:
    return _closed_system(curve, pc, bordered=False)


def assemble_volume(curve: ClosedCurve, pc: PenaltyConfig) -> SaddleSystem:
    return _closed_system(curve, pc, bordered=True)


def assemble_wetting(chain: OpenChain, wp: WettingPhysics, pc: PenaltyConfig) -> SaddleSystem:
    x = chain.nodes
    lengths, tangents = _lengths(x, False)
    s = K.length_weights(lengths, False, pc.resolve(chain.n, closed=False), wp.gamma)
    g = K.forces_open(tangents, s, wp.gamma * math.cos(wp.theta_y))
    diag, off, border = K.assemble_open(x, lengths, wp.xi0, wp.xi1)
    return SaddleSystem(diag, off, g, border, cyclic=False)
