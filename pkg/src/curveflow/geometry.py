"""Polygonal curve primitives.

Curves are thin wrappers around an ``(n, 2)`` float array of node
coordinates. A :class:`ClosedCurve` is a counterclockwise polygon; an
:class:`OpenChain` is a droplet profile whose first node is the right
contact point and whose last node is the left contact point, both on
the substrate line ``y = 0``.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from curveflow._kernels import EPS_GEOM
from curveflow.errors import (
    DegenerateSegment,
    EndpointOffSubstrate,
    GeometryError,
    WrongOrientation,
)

# rotates a unit tangent into the outward normal of a CCW curve
P = np.array([[0.0, 1.0], [-1.0, 0.0]])


def _as_nodes(nodes) -> np.ndarray:
    arr = np.array(nodes, dtype=float)
    if arr.ndim != 2 or arr.shape[1] != 2:
        raise GeometryError(f"nodes must have shape (n, 2), got {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise GeometryError("node coordinates must be finite")
    return arr


@dataclass(frozen=True, eq=False)
class ClosedCurve:
    nodes: np.ndarray

    closed = True

    def __post_init__(self):
        object.__setattr__(self, "nodes", _as_nodes(self.nodes))

    @property
    def n(self) -> int:
        return self.nodes.shape[0]

    def with_nodes(self, nodes) -> ClosedCurve:
        return ClosedCurve(nodes)


@dataclass(frozen=True, eq=False)
class OpenChain:
    nodes: np.ndarray

    closed = False

    def __post_init__(self):
        object.__setattr__(self, "nodes", _as_nodes(self.nodes))

    @property
    def n(self) -> int:
        return self.nodes.shape[0]

    def with_nodes(self, nodes) -> OpenChain:
        return OpenChain(nodes)


Curve = ClosedCurve | OpenChain


@dataclass(frozen=True)
class SegmentFrames:
    """Per-segment lengths, unit tangents and outward unit normals."""

    lengths: np.ndarray
    tangents: np.ndarray
    normals: np.ndarray

    def __len__(self) -> int:
        return self.lengths.shape[0]


def _edges(curve: Curve) -> np.ndarray:
    x = curve.nodes
    if curve.closed:
        return np.roll(x, -1, axis=0) - x
    return x[1:] - x[:-1]


def _signed_area(x: np.ndarray) -> float:
    xn = np.roll(x, -1, axis=0)
    return 0.5 * float(np.sum(x[:, 0] * xn[:, 1] - xn[:, 0] * x[:, 1]))


def validate(curve: Curve) -> Curve:
    """Check the type invariants and return the curve unchanged."""
    x = curve.nodes
    n = x.shape[0]
    if n < 3:
        raise GeometryError(f"a curve needs at least 3 nodes, got {n}")
    lengths = np.hypot(*_edges(curve).T)
    bad = np.flatnonzero(lengths <= EPS_GEOM)
    if bad.size:
        i = int(bad[0])
        raise DegenerateSegment(
            f"segment {i} has length {lengths[i]:.3e} <= {EPS_GEOM:g}"
        )
    if curve.closed:
        area = _signed_area(x)
        if area <= 0.0:
            raise WrongOrientation(f"closed curve has signed area {area:.6g} <= 0")
    else:
        if x[0, 1] != 0.0 or x[-1, 1] != 0.0:
            raise EndpointOffSubstrate(
                f"endpoints must satisfy y = 0, got y_1={x[0, 1]!r}, y_n={x[-1, 1]!r}"
            )
        if np.any(x[1:-1, 1] <= 0.0):
            raise EndpointOffSubstrate("interior chain nodes must lie above y = 0")
        if not x[0, 0] > x[-1, 0]:
            raise WrongOrientation("first chain node must be the right contact point")
    return curve


def segment_frames(curve: Curve) -> SegmentFrames:
    e = _edges(curve)
    lengths = np.hypot(e[:, 0], e[:, 1])
    tangents = e / lengths[:, None]
    normals = tangents @ P.T
    return SegmentFrames(lengths, tangents, normals)


def segment_lengths(curve: Curve) -> np.ndarray:
    e = _edges(curve)
    return np.hypot(e[:, 0], e[:, 1])


def total_length(curve: Curve) -> float:
    return float(np.sum(segment_lengths(curve)))


def enclosed_area(curve: Curve) -> float:
    """Shoelace area. Open chains are closed along the substrate segment."""
    # for a chain the closing edge lies on y = 0 and contributes nothing,
    # so the cyclic shoelace sum is already the droplet area
    return _signed_area(curve.nodes)


def turning_angle_sum(curve: ClosedCurve) -> float:
    """Sum of signed exterior angles; 2*pi for a simple CCW polygon."""
    t = _edges(curve)
    tp = np.roll(t, 1, axis=0)
    cross = tp[:, 0] * t[:, 1] - tp[:, 1] * t[:, 0]
    dot = np.sum(tp * t, axis=1)
    return float(np.sum(np.arctan2(cross, dot)))


def mesh_ratio(curve: Curve) -> float:
    lengths = segment_lengths(curve)
    return float(lengths.max() / lengths.min())


def contact_angles(chain: OpenChain) -> tuple[float, float]:
    """(theta_right, theta_left), measured inside the droplet."""
    x = chain.nodes
    d0 = x[1] - x[0]
    dl = x[-2] - x[-1]
    theta_right = float(np.arctan2(d0[1], -d0[0]))
    theta_left = float(np.arctan2(dl[1], dl[0]))
    return theta_right, theta_left


def read_curve_csv(path: str | Path, closed: bool = True) -> Curve:
    """Read an ``i,x,y`` CSV (no repeated closing node)."""
    rows = []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames != ["i", "x", "y"]:
            raise GeometryError(f"{path}: expected header i,x,y, got {reader.fieldnames}")
        for row in reader:
            rows.append((float(row["x"]), float(row["y"])))
    cls = ClosedCurve if closed else OpenChain
    return cls(np.array(rows))


def write_curve_csv(curve: Curve, path: str | Path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["i", "x", "y"])
        for i, (px, py) in enumerate(curve.nodes, start=1):
            w.writerow([i, repr(float(px)), repr(float(py))])
