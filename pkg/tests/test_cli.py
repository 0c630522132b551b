import json
import math

import numpy as np
import pytest

from curveflow.cli import (
    RunConfig,
    cmd_converge,
    cmd_mri,
    cmd_run,
    generate_initial,
    main,
    parse_config,
)
from curveflow.errors import ConfigError
from curveflow.geometry import ClosedCurve, validate, write_curve_csv


def write(tmp_path, cfg, name="cfg.json"):
    path = tmp_path / name
    path.write_text(json.dumps(cfg, indent=1))
    return str(path)


@pytest.fixture
def out(tmp_path, monkeypatch):
    d = tmp_path / "out"
    monkeypatch.setenv("CURVEFLOW_OUT", str(d))
    return d


def test_generate_shapes():
    sq = generate_initial("circle", 4)
    assert np.allclose(sq.nodes, [[0, 1], [-1, 0], [0, -1], [1, 0]], atol=1e-15)
    fl = generate_initial("flower", 20)
    assert fl.nodes[-1] == pytest.approx([1.0, 0.0], abs=1e-12)
    assert fl.nodes[0] == pytest.approx([0.0, 0.0], abs=1e-15)
    semi = generate_initial("semicircle", 40)
    assert semi.n == 40
    assert semi.nodes[0].tolist() == [1.0, 0.0]
    assert semi.nodes[-1, 1] == 0.0
    validate(semi)
    with pytest.raises(ConfigError):
        generate_initial("circle", 2)
    with pytest.raises(ConfigError):
        generate_initial("blob", 10)


def test_unknown_key_reports_line():
    text = '{\n  "problem": "mcf",\n  "shape": "circle",\n  "n": 10,\n  "tend": 1\n}'
    with pytest.raises(ConfigError, match=r"cfg\.json:5: tend: unknown key"):
        parse_config(text, "cfg.json")


def test_bad_json_reports_line():
    with pytest.raises(ConfigError, match=r"x:3: invalid JSON"):
        parse_config('{\n "n": 3,\n "shape" "circle"}', "x")


@pytest.mark.parametrize("patch, pattern", [
    ({"n": 2}, "n: must be >= 3"),
    ({"n": 4.5}, "n: expected int"),
    ({"dt": -1.0}, "dt: must be positive"),
    ({"dt": 1.0, "t_end": 0.5}, "dt: must be smaller"),
    ({"penalty": "maybe"}, "penalty"),
    ({"theta_y": 1.0}, "only meaningful for wetting"),
    ({"shape": "semicircle"}, "needs a closed shape"),
    ({"shape": "file"}, "curve_file is required"),
    ({"problem": "wetting"}, "semicircle or a file"),
    ({"penalty": "off", "delta": 0.1}, "set while penalty is off"),
    ({"record_stride": 0}, "record_stride"),
    ({"problem": "heat"}, "problem: must be one of"),
    ({"n": True}, "expected int"),
])
def test_invalid_configs(patch, pattern):
    cfg = {"problem": "mcf", "shape": "circle", "n": 10}
    cfg.update(patch)
    with pytest.raises(ConfigError, match=pattern):
        parse_config(json.dumps(cfg, indent=1))


def test_missing_required_key():
    with pytest.raises(ConfigError, match="missing required key 'n'"):
        parse_config('{"problem": "mcf", "shape": "circle"}')


def test_defaults_follow_experiments():
    c = RunConfig("mcf", "circle", 40).with_defaults()
    assert (c.dt, c.t_end) == (2.5e-4, 0.2)
    w = RunConfig("wetting", "semicircle", 40, theta_y=2 * math.pi / 3)
    assert (w.with_defaults().dt, w.with_defaults().t_end, w.with_defaults().xi0) == (1e-5, 4.0, 1.0)
    assert w.with_defaults().stationary_tol == 1e-6
    e3 = w.with_defaults("err3")
    assert (e3.dt, e3.xi0, e3.xi1) == (5e-6, 0.1, 0.1)
    a3 = RunConfig("wetting", "semicircle", 40, theta_y=math.pi / 3).with_defaults("err3")
    assert (a3.dt, a3.t_end, a3.xi0) == (1e-6, 5.0, 0.02)
    explicit = RunConfig("wetting", "semicircle", 40, xi0=0.5, dt=2e-5).with_defaults("err3")
    assert (explicit.dt, explicit.xi0, explicit.xi1) == (2e-5, 0.5, 0.1)
    f = RunConfig("mcf", "flower", 80).with_defaults()
    assert (f.dt, f.t_end, f.max_halvings) == (1e-4, 0.41, 5)


def test_run_writes_outputs(tmp_path, out):
    path = write(tmp_path, {"problem": "mcf", "shape": "circle", "n": 40, "record_stride": 200})
    assert main(["run", "--config", path]) == 0
    nodes = (out / "nodes.csv").read_text().splitlines()
    assert nodes[0] == "t,i,x,y"
    assert len(nodes) == 1 + 5 * 40
    diag = (out / "diagnostics.csv").read_text().splitlines()
    assert diag[0] == "t,energy,penalized_energy,dissipation,area,mri,lambda,theta_right,theta_left"
    assert diag[1].endswith("nan,nan,nan")
    summary = json.loads((out / "summary.json").read_text())
    assert summary["status"] == "completed"
    assert summary["t_final"] == pytest.approx(0.2)
    assert abs(summary["mean_radius"] - math.sqrt(0.6)) < 1.0647e-3 * 1.1


def test_run_is_byte_deterministic(tmp_path, monkeypatch):
    cfg = {"problem": "mcf_volume", "shape": "flower", "n": 40, "dt": 1e-5, "t_end": 2e-3, "record_stride": 50}
    path = write(tmp_path, cfg)
    blobs = []
    for k in range(2):
        monkeypatch.setenv("CURVEFLOW_OUT", str(tmp_path / f"o{k}"))
        assert main(["run", "--config", path]) == 0
        blobs.append([(tmp_path / f"o{k}" / f).read_bytes() for f in ("nodes.csv", "diagnostics.csv")])
    assert blobs[0] == blobs[1]


def test_volume_summary_reports_drift(out):
    s = cmd_run(RunConfig("mcf_volume", "flower", 40, dt=1e-5, t_end=1e-3, record_stride=100))
    assert s["area_drift"] < 1e-10
    assert s["lambda"] is not None


def test_semicircle_right_angle_is_stationary(out):
    s = cmd_run(RunConfig("wetting", "semicircle", 21, theta_y=math.pi / 2, penalty="off"))
    assert s["status"] == "stationary"
    assert s["steps"] == 0
    assert s["stationarity"] <= 1e-10
    assert s["lambda"] == pytest.approx(-1 / math.cos(math.pi / 40), abs=1e-12)


def test_curve_file_shape(tmp_path, out):
    curve = ClosedCurve(generate_initial("circle", 12).nodes * 0.5)
    write_curve_csv(curve, tmp_path / "c.csv")
    s = cmd_run(RunConfig("mcf", "file", 12, dt=1e-4, t_end=1e-2, curve_file=str(tmp_path / "c.csv")))
    assert s["n"] == 12 and s["status"] == "completed"


def test_numerical_abort_exit_code(tmp_path, out, capsys):
    path = write(tmp_path, {"problem": "mcf", "shape": "circle", "n": 8, "dt": 1e-3, "t_end": 0.6})
    assert main(["run", "--config", path]) == 3
    assert json.loads((out / "summary.json").read_text())["status"] == "degenerate"


def test_config_error_exit_code(tmp_path, out, capsys):
    path = write(tmp_path, {"problem": "mcf", "shape": "circle", "n": 8, "bogus": 1})
    assert main(["run", "--config", path]) == 2
    assert "bogus: unknown key" in capsys.readouterr().err
    assert main(["run", "--config", str(tmp_path / "missing.json")]) == 2


def test_converge_err1(tmp_path, out):
    rows = cmd_converge(RunConfig("mcf", "circle", 5), [5, 10, 20], "err1")
    assert [r.n for r in rows] == [5, 10, 20]
    assert rows[1].order == pytest.approx(2.20, abs=0.01)
    lines = (out / "convergence.csv").read_text().splitlines()
    assert lines[0] == "n,err,order"
    assert lines[1].endswith(",nan")


def test_converge_parallel_matches_serial(tmp_path, monkeypatch):
    cfg = RunConfig("mcf", "circle", 5, t_end=0.05)
    got = []
    for jobs in (1, 2):
        monkeypatch.setenv("CURVEFLOW_OUT", str(tmp_path / f"j{jobs}"))
        cmd_converge(cfg, [5, 10, 20], "err1", jobs=jobs)
        got.append((tmp_path / f"j{jobs}" / "convergence.csv").read_bytes())
    assert got[0] == got[1]


def test_converge_metric_checks(out):
    with pytest.raises(ConfigError):
        cmd_converge(RunConfig("mcf", "flower", 5), [5, 10], "err1")
    with pytest.raises(ConfigError):
        cmd_converge(RunConfig("mcf", "circle", 5), [5, 10], "err2")
    with pytest.raises(ConfigError):
        cmd_converge(RunConfig("mcf", "circle", 5), [10, 5], "err1")


def test_converge_cli_prints_rows(tmp_path, out, capsys):
    path = write(tmp_path, {"problem": "mcf", "shape": "circle", "n": 5, "t_end": 0.05})
    assert main(["converge", "--config", path, "--ns", "5,10", "--metric", "err1"]) == 0
    assert len(capsys.readouterr().out.splitlines()) == 2


@pytest.mark.parametrize("penalty", ["on", "off"])
def test_mri_circle_constant(tmp_path, out, penalty):
    path = write(tmp_path, {"problem": "mcf", "shape": "circle", "n": 40, "record_stride": 40})
    assert main(["mri", "--config", path, "--penalty", penalty]) == 0
    lines = (out / "mri.csv").read_text().splitlines()
    assert lines[0] == "t,psi"
    psi = [float(line.split(",")[1]) for line in lines[1:]]
    assert max(abs(p - 1) for p in psi) <= 1e-12


def test_mri_rejects_wetting(out):
    with pytest.raises(ConfigError):
        cmd_mri(RunConfig("wetting", "semicircle", 10), "on")
