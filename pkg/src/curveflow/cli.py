"""Command line harness: configs, initial curves, runs and sweeps.

Usage::

    curveflow run --config circle.json
    curveflow converge --config circle.json --ns 5,10,20,40,80 --metric err1
    curveflow mri --config flower.json --penalty off

Exit status is 0 on success, 2 for a bad config and 3 when a simulation
aborts (collapsed segment, singular solve, energy increase).
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import json
import logging
import math
import os
import re
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from curveflow.energy import PenaltyConfig, WettingPhysics
from curveflow.errors import ConfigError, CurveFlowError
from curveflow.geometry import (
    ClosedCurve,
    Curve,
    OpenChain,
    enclosed_area,
    read_curve_csv,
)
from curveflow.integrator import FlowProblem, StepControls, Trajectory, run, velocity
from curveflow.metrics import (
    DiagnosticsRecord,
    err1,
    err2,
    err3,
    exact_cap,
    exact_circle,
    order,
)

logger = logging.getLogger("curveflow")

EXIT_OK, EXIT_CONFIG, EXIT_ABORT = 0, 2, 3
PROBLEMS = ("mcf", "mcf_volume", "wetting")
SHAPES = ("circle", "flower", "semicircle", "file")
METRICS = ("err1", "err2", "err3")
WETTING_KEYS = ("gamma", "xi0", "xi1", "theta_y")

# key -> accepted JSON types
_SCHEMA = {
    "problem": (str,),
    "shape": (str,),
    "n": (int,),
    "dt": (int, float),
    "t_end": (int, float),
    "penalty": (str,),
    "delta": (int, float),
    "gamma": (int, float),
    "xi0": (int, float),
    "xi1": (int, float),
    "theta_y": (int, float),
    "record_stride": (int,),
    "stationary_tol": (int, float),
    "max_halvings": (int,),
    "curve_file": (str,),
    "out_dir": (str,),
}


@dataclass(frozen=True)
class RunConfig:
    problem: str
    shape: str
    n: int
    dt: float | None = None
    t_end: float | None = None
    penalty: str = "on"
    delta: float | None = None
    gamma: float = 1.0
    xi0: float | None = None
    xi1: float | None = None
    theta_y: float = math.pi / 2
    record_stride: int = 1
    stationary_tol: float | None = None
    max_halvings: int | None = None
    curve_file: str | None = None
    out_dir: str = "out"

    @property
    def closed(self) -> bool:
        return self.problem != "wetting"

    def flow_problem(self) -> FlowProblem:
        pc = PenaltyConfig(enabled=self.penalty == "on",
                           delta=self.delta if self.penalty == "on" else 0.0)
        wp = WettingPhysics(self.gamma, self.theta_y, self.xi0 or 1.0, self.xi1 or 1.0)
        return FlowProblem(self.problem, wp, pc)

    def controls(self) -> StepControls:
        return StepControls(self.dt, self.t_end, self.record_stride,
                            self.stationary_tol or 0.0, self.max_halvings or 0)

    def with_defaults(self, metric: str | None = None) -> RunConfig:
        """Fill unset numerics with the experiment defaults.

        err3 sweeps lower the friction to 0.1 (obtuse angles) or 0.02
        (acute) and shrink dt to match; everything else uses xi = 1.
        """
        c = {}
        acute = self.theta_y < math.pi / 2
        if self.problem == "wetting":
            slow = metric == "err3"
            xi = (0.02 if acute else 0.1) if slow else 1.0
            c["xi0"] = self.xi0 if self.xi0 is not None else xi
            c["xi1"] = self.xi1 if self.xi1 is not None else xi
            dt = (1e-6 if acute else 5e-6) if slow else 1e-5
            t_end = 5.0 if acute else 4.0
            c["stationary_tol"] = 1e-6 if self.stationary_tol is None else self.stationary_tol
        elif self.shape == "flower":
            dt, t_end = 1e-4, 0.41
            # fixed dt = 1e-4 is too stiff for the flower; let the guard halve it
            c["max_halvings"] = 5 if self.max_halvings is None else self.max_halvings
        else:
            dt, t_end = 2.5e-4, 0.2
        c["dt"] = self.dt if self.dt is not None else dt
        c["t_end"] = self.t_end if self.t_end is not None else t_end
        return dataclasses.replace(self, **c)


def _key_line(text: str, key: str) -> int:
    m = re.search(r'"%s"\s*:' % re.escape(key), text)
    return text.count("\n", 0, m.start()) + 1 if m else 1


def parse_config(text: str, source: str = "<config>") -> RunConfig:
    """Parse and validate a JSON config; errors name the offending line."""
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{source}:{exc.lineno}: invalid JSON: {exc.msg}") from None
    if not isinstance(raw, dict):
        raise ConfigError(f"{source}:1: top level must be an object")

    def fail(key, msg):
        raise ConfigError(f"{source}:{_key_line(text, key)}: {key}: {msg}")

    for key, value in raw.items():
        if key not in _SCHEMA:
            fail(key, "unknown key")
        types = _SCHEMA[key]
        if isinstance(value, bool) or not isinstance(value, types):
            fail(key, f"expected {'/'.join(t.__name__ for t in types)}, got {json.dumps(value)}")
    for key in ("problem", "shape", "n"):
        if key not in raw:
            raise ConfigError(f"{source}:1: missing required key {key!r}")
    if raw["problem"] not in PROBLEMS:
        fail("problem", f"must be one of {', '.join(PROBLEMS)}")
    if raw["shape"] not in SHAPES:
        fail("shape", f"must be one of {', '.join(SHAPES)}")
    if raw.get("penalty", "on") not in ("on", "off"):
        fail("penalty", "must be 'on' or 'off'")
    if raw["n"] < 3:
        fail("n", "must be >= 3")
    for key in ("dt", "t_end", "gamma", "xi0", "xi1"):
        if key in raw and not raw[key] > 0:
            fail(key, "must be positive")
    for key in ("delta", "stationary_tol", "max_halvings"):
        if key in raw and raw[key] < 0:
            fail(key, "must be >= 0")
    if "record_stride" in raw and raw["record_stride"] < 1:
        fail("record_stride", "must be >= 1")
    if "dt" in raw and "t_end" in raw and raw["dt"] >= raw["t_end"]:
        fail("dt", "must be smaller than t_end")

    wetting = raw["problem"] == "wetting"
    if wetting:
        if raw["shape"] not in ("semicircle", "file"):
            fail("shape", "wetting starts from a semicircle or a file")
        if "theta_y" in raw and not 0 < raw["theta_y"] < math.pi:
            fail("theta_y", "must lie strictly inside (0, pi)")
    else:
        if raw["shape"] == "semicircle":
            fail("shape", f"{raw['problem']} needs a closed shape")
        for key in WETTING_KEYS:
            if key in raw:
                fail(key, f"only meaningful for wetting, not {raw['problem']}")
    if (raw["shape"] == "file") != ("curve_file" in raw):
        key = "curve_file" if "curve_file" in raw else "shape"
        fail(key, "curve_file is required exactly when shape is 'file'")
    if raw.get("penalty") == "off" and "delta" in raw:
        fail("delta", "set while penalty is off")
    return RunConfig(**raw)


def load_config(path: str | Path) -> RunConfig:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"{path}: {exc.strerror}") from None
    return parse_config(text, str(path))


def generate_initial(shape: str, n: int, curve_file: str | None = None, closed: bool = True) -> Curve:
    if n < 3:
        raise ConfigError("n must be >= 3")
    if shape == "circle":
        a = 2 * math.pi * np.arange(1, n + 1) / n
        return ClosedCurve(np.column_stack([np.cos(a), np.sin(a)]))
    if shape == "flower":
        a = 2 * math.pi * np.arange(1, n + 1) / n
        r = 2.0 - 2.0 ** np.sin(5 * a)
        return ClosedCurve(np.column_stack([r * np.cos(a), r * np.sin(a)]))
    if shape == "semicircle":
        # n nodes including both endpoints, right endpoint first
        a = math.pi * np.arange(n) / (n - 1)
        x = np.column_stack([np.cos(a), np.sin(a)])
        x[[0, -1], 1] = 0.0
        return OpenChain(x)
    if shape == "file":
        if curve_file is None:
            raise ConfigError("shape 'file' needs curve_file")
        return read_curve_csv(curve_file, closed=closed)
    raise ConfigError(f"unknown shape {shape!r}")


def initial_curve(cfg: RunConfig) -> Curve:
    return generate_initial(cfg.shape, cfg.n, cfg.curve_file, cfg.closed)


def out_dir(cfg: RunConfig) -> Path:
    path = Path(os.environ.get("CURVEFLOW_OUT") or cfg.out_dir)
    path.mkdir(parents=True, exist_ok=True)
    return path


def _fmt(v) -> str:
    return repr(float(v)) if isinstance(v, (float, np.floating)) else str(v)


def _write_csv(path: Path, header, rows) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(v) for v in row])


def simulate(cfg: RunConfig) -> tuple[Curve, Trajectory]:
    cfg = cfg.with_defaults()
    curve = initial_curve(cfg)
    try:
        traj = run(cfg.flow_problem(), curve, cfg.controls())
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    return curve, traj


def summarize(cfg: RunConfig, traj: Trajectory) -> dict:
    first, last = traj.records[0], traj.records[-1]
    final = traj.final
    a0 = first.area
    out = {
        "problem": cfg.problem,
        "shape": cfg.shape,
        "n": final.n,
        "status": traj.status,
        "error": traj.error,
        "steps": traj.steps,
        "t_final": last.t,
        "energy": last.energy,
        "penalized_energy": last.penalized_energy,
        "area": last.area,
        "area_drift": abs(last.area - a0) / abs(a0),
        "mri": last.mri,
        "lambda": None if math.isnan(last.lam) else last.lam,
        "theta_right": None if math.isnan(last.theta_right) else last.theta_right,
        "theta_left": None if math.isnan(last.theta_left) else last.theta_left,
        "worst_identity_residual": traj.worst_identity,
        "worst_constraint_residual": traj.worst_constraint,
    }
    try:
        out["stationarity"] = velocity(cfg.flow_problem(), final).vmax()
    except CurveFlowError:
        out["stationarity"] = None
    if cfg.closed:
        c = final.nodes.mean(axis=0)
        out["mean_radius"] = float(np.hypot(*(final.nodes - c).T).mean())
    return out


def cmd_run(cfg: RunConfig) -> dict:
    """Run one simulation and write nodes.csv, diagnostics.csv, summary.json."""
    cfg = cfg.with_defaults()
    _, traj = simulate(cfg)
    dest = out_dir(cfg)
    _write_csv(dest / "nodes.csv", ("t", "i", "x", "y"),
               ((t, i, px, py) for t, c in zip(traj.times, traj.curves)
                for i, (px, py) in enumerate(c.nodes, start=1)))
    _write_csv(dest / "diagnostics.csv", DiagnosticsRecord.FIELDS, (r.row() for r in traj.records))
    summary = summarize(cfg, traj)
    (dest / "summary.json").write_text(json.dumps(summary, indent=2) + "\n", encoding="utf-8")
    return summary


def reference_area(cfg: RunConfig, initial: Curve) -> float:
    # the smooth semicircle, not its inscribed polygon
    return math.pi / 2 if cfg.shape == "semicircle" else enclosed_area(initial)


def measure(cfg: RunConfig, metric: str) -> tuple[int, float, str]:
    """Run ``cfg`` and score its final state with ``metric``."""
    initial, traj = simulate(cfg.with_defaults(metric))
    if traj.status not in ("completed", "stationary"):
        return cfg.n, math.nan, traj.status
    final = traj.final
    if metric == "err1":
        return cfg.n, err1(final, exact_circle(1.0, traj.times[-1])), traj.status
    cap = exact_cap(reference_area(cfg, initial), cfg.theta_y)
    if metric == "err2":
        return cfg.n, err2(final, cap.energy, cfg.theta_y, cfg.gamma), traj.status
    return cfg.n, err3(final, cap), traj.status


def _check_metric(cfg: RunConfig, metric: str) -> None:
    if metric not in METRICS:
        raise ConfigError(f"unknown metric {metric!r}")
    if metric == "err1" and (cfg.problem != "mcf" or cfg.shape != "circle"):
        raise ConfigError("err1 needs problem 'mcf' on shape 'circle'")
    if metric in ("err2", "err3") and cfg.problem != "wetting":
        raise ConfigError(f"{metric} needs problem 'wetting'")
    if metric in ("err2", "err3") and cfg.gamma != 1.0:
        raise ConfigError(f"{metric} reference cap assumes gamma = 1")


def cmd_converge(cfg: RunConfig, ns: list[int], metric: str, jobs: int = 1) -> list:
    """Sweep n, write convergence.csv; rows keep the order of ``ns``."""
    _check_metric(cfg, metric)
    if sorted(set(ns)) != list(ns) or ns[0] < 3:
        raise ConfigError("--ns must be strictly increasing integers >= 3")
    members = [dataclasses.replace(cfg, n=n) for n in ns]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(measure, members, [metric] * len(members)))
    else:
        results = [measure(m, metric) for m in members]
    bad = [(n, s) for n, _, s in results if s not in ("completed", "stationary")]
    if bad:
        raise CurveFlowError("sweep member aborted: " + ", ".join(f"n={n} {s}" for n, s in bad))
    rows = order([(n, e) for n, e, _ in results])
    _write_csv(out_dir(cfg) / "convergence.csv", ("n", "err", "order"),
               ((r.n, r.err, r.order) for r in rows))
    return rows


def cmd_mri(cfg: RunConfig, penalty: str) -> Trajectory:
    """Mesh-ratio history; an aborted run still writes what it reached."""
    if not cfg.closed:
        raise ConfigError("mri needs a closed-curve problem")
    if penalty not in ("on", "off"):
        raise ConfigError("--penalty must be 'on' or 'off'")
    cfg = dataclasses.replace(cfg, penalty=penalty, delta=cfg.delta if penalty == "on" else None)
    _, traj = simulate(cfg)
    if traj.status not in ("completed", "stationary"):
        logger.warning("mri run stopped early (%s): %s", traj.status, traj.error)
    _write_csv(out_dir(cfg) / "mri.csv", ("t", "psi"), ((r.t, r.mri) for r in traj.records))
    return traj


def _ns(text: str) -> list[int]:
    try:
        return [int(s) for s in text.split(",") if s.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad --ns list {text!r}") from None


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="curveflow", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)
    r = sub.add_parser("run", help="run one simulation")
    r.add_argument("--config", required=True)
    c = sub.add_parser("converge", help="sweep node counts and report orders")
    c.add_argument("--config", required=True)
    c.add_argument("--ns", type=_ns, default=[5, 10, 20, 40, 80])
    c.add_argument("--metric", choices=METRICS, required=True)
    c.add_argument("--jobs", type=int, default=1)
    m = sub.add_parser("mri", help="mesh-ratio history with or without the penalty")
    m.add_argument("--config", required=True)
    m.add_argument("--penalty", choices=("on", "off"), required=True)
    return p


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = load_config(args.config)
        if args.command == "run":
            summary = cmd_run(cfg)
            print(json.dumps(summary, indent=2))
            if summary["status"] not in ("completed", "stationary"):
                return EXIT_ABORT
        elif args.command == "converge":
            for row in cmd_converge(cfg, args.ns, args.metric, args.jobs):
                print(f"{row.n:6d}  {row.err:.4e}  {row.order:.2f}")
        else:
            traj = cmd_mri(cfg, args.penalty)
            print(f"{traj.status}: psi({traj.records[-1].t:.4g}) = {traj.records[-1].mri:.6g}")
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except CurveFlowError as exc:
        print(f"numerical abort: {exc}", file=sys.stderr)
        return EXIT_ABORT
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
