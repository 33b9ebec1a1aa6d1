import json
import math

import numpy as np
import pytest
import yaml

from hybridmanip.cli import main
from hybridmanip.errors import NumericalFailure, ScenarioError, SimulationAbort
from hybridmanip.sim import (
    Circle,
    Scenario,
    Simulation,
    Trapezoid,
    Waypoints,
    build_reference,
    compute_tracking_metrics,
    letter_points,
    parse_override,
    read_log,
    rk4_step,
    run_scenario,
)
from hybridmanip.vehicle import SurfaceModel

QUIET = {"estimator": {"enabled": False}, "noise": {"position": 0.0, "attitude_deg": 0.0}}


def _hover(**extra):
    doc = {"duration": 4.0, **QUIET, "reference": {"type": "hover", "position": [0, 0, 1]},
           "initial": {"position": [0.05, -0.05, 0.9]}}
    doc.update(extra)
    return Scenario(doc)


# ---- integrator ---------------------------------------------------------------

def test_rk4_constant_and_free_fall_exact():
    assert np.allclose(rk4_step(lambda x: np.array([2.0]), np.array([1.0]), 0.1), [1.2])
    g = 9.81
    x = np.array([10.0, 0.0])
    for _ in range(100):
        x = rk4_step(lambda s: np.array([s[1], -g]), x, 0.01)
    assert np.allclose(x, [10.0 - 0.5 * g, -g], rtol=0, atol=1e-12)


def test_rk4_harmonic_oscillator():
    x = np.array([1.0, 0.0])
    dt, n = 1e-3, 6283
    for _ in range(n):
        x = rk4_step(lambda s: np.array([s[1], -s[0]]), x, dt)
    T = n * dt
    assert np.abs(x - [math.cos(T), -math.sin(T)]).max() < 1e-9


def test_rk4_rejects_non_finite():
    with pytest.raises(NumericalFailure):
        rk4_step(lambda s: s * np.nan, np.array([1.0]), 0.1)
    with pytest.raises(ValueError):
        rk4_step(lambda s: s, np.array([1.0]), 0.0)


# ---- metrics ------------------------------------------------------------------

def test_metrics_zero_and_constant_offset():
    t = np.linspace(0, 1, 11)
    P = np.zeros((11, 3))
    m = compute_tracking_metrics(t, P, P)
    assert m.average_error == m.max_error == 0.0 and m.samples == 11
    m = compute_tracking_metrics(t, P + [0.003, 0.004, 0.0], P)
    assert m.average_error == pytest.approx(0.005) and m.max_error == pytest.approx(0.005)
    assert m.rms_xyz == pytest.approx((0.003, 0.004, 0.0))


def test_metrics_synthetic_and_settle():
    t = np.linspace(0, 2, 201)
    P = np.zeros((201, 3))
    P[:, 0] = np.where(t < 1.0, 1.0, 0.01 * np.sin(2 * math.pi * t))
    m = compute_tracking_metrics(t, P, np.zeros((201, 3)), settle_time=1.0, U1=np.full(201, 3.0),
                                 gamma_hat=np.full(201, 0.52), gamma_true=0.5, gamma_window=0.5)
    assert m.max_error == pytest.approx(0.01, rel=1e-3)
    assert m.average_error == pytest.approx(np.mean(np.abs(0.01 * np.sin(2 * math.pi * t[t >= 1]))))
    assert m.thrust_integral == pytest.approx(6.0)
    assert m.gamma_error == pytest.approx(0.02)
    with pytest.raises(ValueError):
        compute_tracking_metrics([], np.zeros((0, 3)), np.zeros((0, 3)))


# ---- scenarios ----------------------------------------------------------------

def test_scenario_validation():
    for bad in ({"duration": -1}, {"rates": {"control": 300}}, {"mode": {"policy": "sometimes"}},
                {"mode": {"initial": "terrestrial"}}, {"reference": {"type": "spiral"}},
                {"control": {"no_such_gain": 1}}, {"vehicle": {"mass": -2.0}}):
        with pytest.raises(ScenarioError):
            Scenario(bad)


def test_overrides(tmp_path):
    assert parse_override("surface.gamma_deg=60") == ("surface.gamma_deg", 60)
    assert parse_override("reference.position=[0, 1, 2]") == ("reference.position", [0, 1, 2])
    with pytest.raises(ScenarioError):
        parse_override("nothing")
    f = tmp_path / "s.yaml"
    f.write_text(yaml.safe_dump({"duration": 1.0, "surface": {"present": True}}))
    sc = Scenario.load(f, overrides=["surface.gamma_deg=45", "control.arm_compensation=false"], seed=9)
    assert sc.surface_model().gamma == pytest.approx(math.pi / 4)
    assert sc.control_config().arm_compensation is False and sc.seed == 9
    assert sc.digest() != Scenario.load(f).digest()


def test_zero_duration_gives_empty_log(tmp_path):
    res = run_scenario(_hover(duration=0.0), out_dir=tmp_path, stem="z")
    assert len(res.log["t"]) == 0 and res.metrics.samples == 0 and res.metrics.max_error == 0.0
    assert read_log(tmp_path / "z.csv")["t"].size == 0


# ---- closed loop --------------------------------------------------------------

def test_hover_converges_noiseless():
    res = run_scenario(_hover())
    t, e = res.log["t"], res.log["error"]
    assert e[t >= 3.0].max() < 1e-3
    held = run_scenario(_hover(initial={}))
    assert held.log["error"].max() < 1e-9


def test_integrator_step_convergence():
    rates = lambda n: {"rates": {"integrator": n, "control": 250, "estimator": 100, "log": 250}}
    a = run_scenario(_hover(duration=2.0, **rates(1000))).log
    b = run_scenario(_hover(duration=2.0, **rates(2000))).log
    pos = lambda c: np.column_stack([c["x"], c["y"], c["z"]])
    assert np.abs(pos(a) - pos(b)).max() < 1e-6


def test_runs_are_deterministic(tmp_path):
    sc = _hover(duration=1.0, noise={"position": 0.002, "attitude_deg": 0.3})
    run_scenario(sc, out_dir=tmp_path / "a", stem="run")
    run_scenario(sc, out_dir=tmp_path / "b", stem="run")
    assert (tmp_path / "a/run.csv").read_bytes() == (tmp_path / "b/run.csv").read_bytes()
    other = Scenario({**sc.doc, "seed": 5})
    run_scenario(other, out_dir=tmp_path / "c", stem="run")
    assert (tmp_path / "c/run.csv").read_bytes() != (tmp_path / "a/run.csv").read_bytes()


def test_mode_switch_debounce():
    sc = Scenario({"duration": 1.0, **QUIET, "surface": {"present": True},
                   "mode": {"policy": "scripted", "initial": "aerial", "debounce": 0.1,
                            "schedule": [[0.5, "terrestrial"], [0.55, "aerial"]]}})
    sim = Simulation(sc)
    for k in range(100):
        sim._update_mode(k * 0.01)
    assert [(round(t, 6), m) for t, m in sim.switches] == [(0.5, "terrestrial"), (0.6, "aerial")]


def test_abort_is_typed_and_keeps_partial_log(tmp_path):
    sc = _hover(duration=1.0, initial={"attitude_deg": [90.0, 0.0, 0.0]})
    with pytest.raises(SimulationAbort) as ei:
        run_scenario(sc, out_dir=tmp_path, stem="bad")
    assert ei.value.kind == "euler-singularity"
    side = json.loads((tmp_path / "bad.json").read_text())
    assert side["abort"]["kind"] == "euler-singularity"
    assert read_log(tmp_path / "bad.csv")["t"].size >= 1


# ---- trajectories -------------------------------------------------------------

def test_trapezoid_profile():
    tr = Trapezoid(1.0, 0.5, 0.25)
    # accelerates for 2 s, covering exactly half the length, then decelerates
    assert tr.duration == pytest.approx(4.0)
    assert tr(tr.duration)[0] == 1.0
    ts = np.linspace(0, tr.duration, 401)
    s = np.array([tr(t)[0] for t in ts])
    assert np.all(np.diff(s) >= -1e-15)
    # triangular when the peak speed is never reached
    tri = Trapezoid(0.1, 1.0, 1.0)
    assert tri.v_peak == pytest.approx(math.sqrt(0.1))
    with pytest.raises(ValueError):
        Trapezoid(1.0, 0.0, 1.0)


def test_waypoints_dwell_and_circle():
    w = Waypoints([[0, 0, 0], [1, 0, 0], [1, 1, 0]], 0.5, 0.25, dwell=2.0)
    T1 = Trapezoid(1.0, 0.5, 0.25).duration
    for t in (T1, T1 + 1.0, T1 + 2.0):
        p, v, _ = w.sample(t)
        assert np.allclose(p, [1, 0, 0]) and np.allclose(v, 0.0)
    assert w.duration == pytest.approx(2 * T1 + 2.0)
    c = Circle([0, 0, 0], 0.2, 0.1, 0.2)
    for t in np.linspace(0, c.duration, 50):
        assert np.linalg.norm(c.sample(t)[0]) == pytest.approx(0.2)


def test_letters_and_surface_mapping():
    pts = letter_points("IL", 1.0, spacing=0.4)
    assert np.allclose(pts[0], [0.3, 1.0, 0.0]) and np.allclose(pts[-1], [1.6, 0.0, 0.0])
    with pytest.raises(ValueError):
        letter_points("Q", 1.0)
    wall = SurfaceModel(gamma=math.pi / 2, origin=np.array([0.5, 0.0, 1.0]))
    ref = build_reference({"type": "letters", "text": "L", "height": 0.2, "frame": "surface",
                           "speed": 0.1, "accel": 0.2}, wall, 0.17)
    p0 = ref(0.0).position
    p_end = ref(ref.end_time + 1.0).position
    # L starts at the top of the page and ends at the bottom right
    assert p0[2] - p_end[2] == pytest.approx(0.2)
    assert p0[0] == pytest.approx(0.5 - 0.17) and p_end[0] == pytest.approx(0.5 - 0.17)


# ---- command line -------------------------------------------------------------

def _write(tmp_path, doc, name="sc.yaml"):
    f = tmp_path / name
    f.write_text(yaml.safe_dump(doc))
    return f


def test_cli_simulate_metrics_estimate(tmp_path, capsys):
    f = _write(tmp_path, {"name": "cli", "duration": 0.6, "surface": {"present": True},
                          "mode": {"initial": "terrestrial"},
                          "reference": {"type": "hover", "frame": "surface", "position": [0, 0]},
                          "estimator": {"horizon": 10}, "metrics": {"settle_time": 0.0}})
    assert main(["simulate", str(f), "--out", str(tmp_path / "o")]) == 0
    out = json.loads(capsys.readouterr().out)
    assert (tmp_path / "o/cli.csv").exists() and len(out["figures"]) == 2
    assert all((tmp_path / "o" / p.split("/")[-1]).exists() for p in out["figures"])
    assert main(["metrics", str(tmp_path / "o/cli.csv")]) == 0
    met = json.loads(capsys.readouterr().out)
    assert met["max_error"] == pytest.approx(out["metrics"]["max_error"])
    assert main(["estimate", str(tmp_path / "o/cli.csv"), "--horizon", "5"]) == 0
    est = json.loads(capsys.readouterr().out)
    assert est["horizon"] == 5 and (tmp_path / "o/cli_estimator_mhe.csv").exists()


def test_cli_error_codes(tmp_path, capsys):
    assert main(["simulate", str(tmp_path / "missing.yaml")]) == 2
    assert "error[invalid-scenario]" in capsys.readouterr().err
    bad = _write(tmp_path, {"duration": "soon"})
    assert main(["simulate", str(bad)]) == 2
    assert main(["metrics", str(tmp_path / "nope.csv")]) == 2
    junk = tmp_path / "junk.csv"
    junk.write_text("a,b\n1,2\n")
    assert main(["metrics", str(junk)]) == 2
    assert main(["estimate", str(junk)]) == 2
    assert "error[invalid-log]" in capsys.readouterr().err
    assert main(["frobnicate"]) == 2
    sing = _write(tmp_path, {"duration": 0.2, **QUIET, "initial": {"attitude_deg": [90, 0, 0]}})
    assert main(["simulate", str(sing), "--out", str(tmp_path / "s")]) == 6
    assert "error[euler-singularity]" in capsys.readouterr().err
