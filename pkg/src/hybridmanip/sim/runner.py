"""Closed-loop simulation: dynamics, sensors, estimator and controllers at their own rates."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..arm import ArmModel, ArmState, default_links
from ..control import AerialController, TerrestrialController
from ..control.terrestrial import thrust_pitch_determination
from ..errors import ContactLostError, HybridManipError, SimulationAbort
from ..estimation import (
    EstimatorInput,
    MheConfig,
    MovingHorizonEstimator,
    NoiseModel,
    fold_force_into_input,
)
from ..rotations import euler_to_matrix, rot_y, wrap_angle
from ..vehicle import (
    RigidBodyState,
    RotorCommand,
    TerrestrialState,
    aerial_derivatives,
    terrestrial_derivatives,
)
from ..vehicle.frames import (
    rigid_to_terrestrial,
    surface_heading,
    terrestrial_to_rigid,
    to_surface_coords,
    wheel_clearance,
)
from ..wrench import Wrench
from .integrate import rk4_step
from .logs import ESTIMATOR_COLUMNS, LOG_COLUMNS, CsvLog, write_sidecar
from .metrics import Metrics, compute_tracking_metrics, empty_metrics
from .scenario import Scenario
from .trajectories import build_reference


@dataclass
class ArmScript:
    """Joint angles ``offset + amplitude sin(2 pi f t + phase)``."""

    offset: np.ndarray
    amplitude: np.ndarray
    frequency: np.ndarray
    phase: np.ndarray

    @classmethod
    def from_dict(cls, d: dict) -> "ArmScript":
        rad = lambda k: np.radians(np.asarray(d[k], dtype=float).reshape(5))
        return cls(rad("offset_deg"), rad("amplitude_deg"),
                   np.asarray(d["frequency_hz"], dtype=float).reshape(5), rad("phase_deg"))

    def __call__(self, t: float) -> ArmState:
        w = 2.0 * math.pi * self.frequency
        arg = w * t + self.phase
        return ArmState(self.offset + self.amplitude * np.sin(arg),
                        self.amplitude * w * np.cos(arg),
                        -self.amplitude * w * w * np.sin(arg))


@dataclass
class SimResult:
    log: dict
    metrics: Metrics
    paths: dict = field(default_factory=dict)
    abort: SimulationAbort | None = None


class _Plant:
    """Physical state: free flight (12-vector) or rolling on the surface (7-vector)."""

    def __init__(self, mode, x, params, surf):
        self.mode, self.x, self.params, self.surf = mode, np.asarray(x, dtype=float), params, surf
        self.accel = np.zeros(3)
        self.omega_dot = np.zeros(3)

    def rigid(self) -> RigidBodyState:
        if self.mode == "aerial":
            return RigidBodyState.from_vector(self.x)
        return terrestrial_to_rigid(TerrestrialState.from_vector(self.x), self.surf, self.params)

    def terr(self) -> TerrestrialState:
        return TerrestrialState.from_vector(self.x)

    def to_aerial(self):
        self.x = self.rigid().to_vector()
        self.mode = "aerial"

    def to_terrestrial(self):
        s = rigid_to_terrestrial(self.rigid(), self.surf, self.params)
        self.x = s.to_vector()
        self.mode = "terrestrial"


def _arm_rolling(w: Wrench, beta: float) -> Wrench:
    """Body-frame reaction on the vehicle to the rolling-frame wrench on the arm."""
    R = rot_y(beta)
    return Wrench(-(R @ w.force), -(R @ w.torque), "rolling")


class Simulation:
    def __init__(self, scenario: Scenario, out_dir=None, stem: str | None = None):
        self.sc = scenario
        d = scenario.doc
        self.params = scenario.vehicle_params()
        self.surf = scenario.surface_model()
        self.cfg = scenario.control_config()
        r = scenario.rates
        self.rate = int(r["integrator"])
        self.dt = 1.0 / self.rate
        self.every = {k: self.rate // int(r[k]) for k in ("control", "estimator", "log")}
        self.dt_ctrl = self.every["control"] * self.dt

        a = d["arm"]
        self.arm_model = None
        self.arm_script = None
        if a["enabled"]:
            self.arm_model = ArmModel(links=default_links(total_mass=float(a["mass"])),
                                      base_offset=np.asarray(a["base_offset"], dtype=float))
            self.arm_script = ArmScript.from_dict(a)

        self.aerial = AerialController(self.params, self.cfg, self.arm_model)
        self.terrestrial = TerrestrialController(self.params, self.cfg, self.arm_model)
        self.reference = build_reference(d["reference"], self.surf, self.params.wheel_radius)

        e = d["estimator"]
        self.estimator = None
        if e["enabled"]:
            mcfg = MheConfig(horizon=int(e["horizon"]), rate_hz=float(r["estimator"]),
                             noise_floor=float(e["noise_floor"]),
                             prior_sigma=tuple(e["prior_sigma"]))
            self.estimator = MovingHorizonEstimator(
                self.params.mass, self.params.gravity,
                NoiseModel.from_dict({"Q": e["Q"], "R": e["R"]}), mcfg)

        n = d["noise"]
        self.sigma = (float(n["position"]), float(n["velocity"]),
                      math.radians(float(n["attitude_deg"])), float(n["rate"]))
        ss = np.random.SeedSequence(scenario.seed)
        self.rng = np.random.default_rng(ss.spawn(1)[0])

        m = d["mode"]
        self.policy = m["policy"]
        self.schedule = sorted((float(t), mode) for t, mode in (m["schedule"] or []))
        self.debounce = float(m["debounce"])
        self.control_mode = m["initial"]
        self.last_switch = -math.inf
        self.switches = []
        self._t_anchor = None

        self.out_dir = Path(out_dir) if out_dir is not None else None
        self.stem = stem or d["name"]
        self.plant = self._initial_plant(m["initial"], d["initial"])

    # setup

    def _arm(self, t) -> ArmState | None:
        return self.arm_script(t) if self.arm_script is not None else None

    def _initial_plant(self, mode, init: dict) -> _Plant:
        p, surf = self.params, self.surf
        ref0 = self.reference(0.0)
        if mode == "aerial":
            pos = np.asarray(init.get("position", ref0.position), dtype=float)
            att = np.radians(np.asarray(init.get("attitude_deg", [0.0, 0.0, 0.0]), dtype=float))
            if "attitude_deg" not in init:
                att[2] = ref0.yaw
            return _Plant("aerial", RigidBodyState(pos, np.zeros(3), att, np.zeros(3)).to_vector(), p, surf)
        s = to_surface_coords(surf, ref0.position)[:2]
        if "surface_xy" in init:
            s = np.asarray(init["surface_xy"], dtype=float)
        if "alpha_deg" in init:
            alpha = math.radians(init["alpha_deg"])
        else:
            alpha = 0.0
            for dt in (0.01, 0.1, 0.5, 1.0, 2.0):
                v = self.reference(self.reference.start_time + dt).velocity
                if np.linalg.norm(v) > 1e-9:
                    alpha = surface_heading(surf, v)
                    break
        f0_r = np.zeros(3)
        arm = self._arm(0.0)
        if self.arm_model is not None and arm is not None:
            # static arm load, in the rolling frame with zero tilt as a first guess
            R = euler_to_matrix(*terrestrial_to_rigid(TerrestrialState(s, alpha), surf, p).attitude)
            w = self.arm_model.base_wrench(arm, R.T @ np.array([0.0, 0.0, p.gravity]),
                                           np.zeros(3), np.zeros(3))
            f0_r = w.force
        sol = thrust_pitch_determination(0.0, surf.gamma, alpha, f0_r, np.zeros(3), p, surf,
                                         motion_sign=0.0,
                                         min_normal_force=self.cfg.min_normal_force_ratio * p.weight,
                                         schedule=self.cfg.thrust_schedule)
        beta = float(init.get("beta_deg", math.degrees(sol.tilt)))
        terr = TerrestrialState(s, alpha, 0.0, math.radians(beta), 0.0, 0.0)
        return _Plant("terrestrial", terr.to_vector(), p, surf)

    # per-tick pieces

    def _measure(self, truth: RigidBodyState) -> RigidBodyState:
        sp, sv, sa, sw = self.sigma
        g = self.rng.standard_normal(12)
        return RigidBodyState(truth.position + sp * g[0:3], truth.velocity + sv * g[3:6],
                              truth.attitude + sa * g[6:9], truth.omega + sw * g[9:12])

    def _arm_wrench(self, truth: RigidBodyState, arm: ArmState | None) -> Wrench:
        """Reaction of the arm on the vehicle, body frame, from the last plant acceleration."""
        if self.arm_model is None or arm is None:
            return Wrench.zero("body")
        R = euler_to_matrix(*truth.attitude)
        a = R.T @ (self.plant.accel + np.array([0.0, 0.0, self.params.gravity]))
        return self.arm_model.reaction_on_vehicle(arm, a, truth.omega, self.plant.omega_dot)

    def _update_mode(self, t: float):
        if self.policy == "fixed":
            return
        if self.policy == "scripted":
            want = self.control_mode
            for ts, mode in self.schedule:
                if ts <= t + 1e-12:
                    want = mode
        else:
            want = self.plant.mode
        if want != self.control_mode and t - self.last_switch >= self.debounce - 1e-12:
            self.control_mode = want
            self.last_switch = t
            self.switches.append((t, want))
            (self.aerial if want == "aerial" else self.terrestrial).reset()

    def _anchor_time(self, t, here) -> float:
        """Path time of the point closest to ``here``, by Newton steps from the last one."""
        ref = self.reference
        lo, hi = max(0.0, t - 2.0), min(max(ref.end_time, t), t + 2.0)
        tp = float(np.clip(self._t_anchor if self._t_anchor is not None else t, lo, hi))
        # coarse scan first: Newton alone stalls where the path speed is zero
        # (ties, as during a dwell, go to the latest time so the anchor never sticks)
        cands = np.clip(tp + 0.02 * np.arange(-5, 6), lo, hi)
        dist = [np.linalg.norm(here - ref(c).position) for c in cands]
        best = min(dist)
        tp = float(max(c for c, d in zip(cands, dist) if d <= best + 1e-12))
        for _ in range(3):
            r = ref(tp)
            d = here - r.position
            den = r.velocity @ r.velocity - r.acceleration @ d
            if den <= 1e-12:
                break
            tp = float(np.clip(tp + (r.velocity @ d) / den, lo, hi))
        self._t_anchor = tp
        return tp

    def _carrot(self, t0, here) -> np.ndarray:
        """Path point ``lookahead_time`` after ``t0``, pushed on until ``lookahead_distance`` away."""
        cfg = self.cfg
        tc = t0 + cfg.lookahead_time
        p = self.reference(tc).position
        while np.linalg.norm(p - here) < cfg.lookahead_distance and tc < self.reference.end_time:
            tc = min(tc + 0.05, self.reference.end_time)
            p = self.reference(tc).position
        return p

    def _control(self, t, meas, arm) -> RotorCommand:
        ref = self.reference(t)
        if self.control_mode == "aerial":
            return self.aerial.update(meas, ref, self.dt_ctrl, arm)
        anchor = self.reference(self._anchor_time(t, meas.position))
        carrot = self._carrot(anchor.t, anchor.position)
        return self.terrestrial.update(meas, ref, carrot, self.dt_ctrl, self.surf, arm, anchor=anchor)

    def _step(self, cmd: RotorCommand, arm_w: Wrench):
        pl, p, surf = self.plant, self.params, self.surf
        stages = []
        if pl.mode == "aerial":
            def f(x):
                d = aerial_derivatives(RigidBodyState.from_vector(x), cmd, arm_w, p)
                stages.append(d)
                return d.value
            x = rk4_step(f, pl.x, self.dt)
            x[8] = wrap_angle(x[8])
        else:
            def f(x):
                terr = TerrestrialState.from_vector(x)
                d = terrestrial_derivatives(terr, cmd, _arm_rolling(arm_w, terr.beta), surf, p)[0]
                stages.append(d)
                return d.value
            x = rk4_step(f, pl.x, self.dt)
            x[2] = wrap_angle(x[2])
        pl.x = x
        pl.accel = stages[0].accel_world
        pl.omega_dot = stages[0].omega_dot_body

    def _advance(self, cmd, arm_w):
        """Integrate one step, handling lift-off and touchdown."""
        pl = self.plant
        if pl.mode == "terrestrial":
            try:
                self._step(cmd, arm_w)
                return
            except ContactLostError:
                if self.policy == "fixed":
                    raise
                pl.to_aerial()
        self._step(cmd, arm_w)
        if (self.policy != "fixed" and self.surf.in_contact
                and wheel_clearance(pl.rigid(), self.surf, self.params) <= 0.0):
            pl.to_terrestrial()

    def _contact(self, cmd, arm_w):
        pl = self.plant
        if pl.mode != "terrestrial":
            return 0.0, 0.0, 0.0, False
        terr = pl.terr()
        try:
            _, F_n, F_l, F_r, slip = terrestrial_derivatives(
                terr, cmd, _arm_rolling(arm_w, terr.beta), self.surf, self.params)
        except ContactLostError as e:
            return e.normal_force, math.nan, math.nan, False
        return F_n, F_l, F_r, slip

    # main loop

    def run(self) -> SimResult:
        n_steps = int(round(self.sc.duration * self.rate))
        rows, est_rows = [], []
        paths = {}
        log = est_log = None
        if self.out_dir is not None:
            self.out_dir.mkdir(parents=True, exist_ok=True)
            paths["log"] = self.out_dir / f"{self.stem}.csv"
            paths["estimator"] = self.out_dir / f"{self.stem}_estimator.csv"
            log = CsvLog(paths["log"], LOG_COLUMNS)
            est_log = CsvLog(paths["estimator"], ESTIMATOR_COLUMNS)
        cmd = RotorCommand()
        est = (np.full(3, math.nan), math.nan, math.nan, 0)
        abort = None
        t = 0.0
        try:
            for k in range(n_steps):
                t = k * self.dt
                truth = self.plant.rigid()
                arm = self._arm(t)
                arm_w = self._arm_wrench(truth, arm)
                meas = None
                if k % self.every["control"] == 0:
                    self._update_mode(t)
                    meas = self._measure(truth)
                    cmd = self._control(t, meas, arm)
                if self.estimator is not None and k % self.every["estimator"] == 0:
                    if meas is None:
                        meas = self._measure(truth)
                    est, erow = self._estimate(t, meas, cmd, arm_w)
                    est_rows.append(erow)
                    if est_log is not None:
                        est_log.append(erow)
                if k % self.every["log"] == 0:
                    row = self._row(t, truth, cmd, arm_w, est)
                    rows.append(row)
                    if log is not None:
                        log.append(row)
                self._advance(cmd, arm_w)
        except HybridManipError as e:
            abort = SimulationAbort(f"aborted at t={t:.4f} s: {e}", cause=e, time=t)
        finally:
            if log is not None:
                log.close()
                est_log.close()
        cols = _columns(rows)
        metrics = self._metrics(cols)
        if self.out_dir is not None:
            extra = {"metrics": metrics.as_dict(), "mode_switches": self.switches,
                     "abort": None if abort is None else {"kind": abort.kind, "time": abort.time,
                                                          "message": str(abort)}}
            paths["sidecar"] = write_sidecar(paths["log"], self.sc.to_json(), self.sc.digest(), extra)
        return SimResult(cols, metrics, paths, abort)

    def _estimate(self, t, meas: RigidBodyState, cmd: RotorCommand, arm_w: Wrench):
        u = EstimatorInput(cmd.U1, *meas.attitude)
        if self.arm_model is not None:
            # modelled arm reaction removed, so the residual force is the contact force
            u = fold_force_into_input(u, euler_to_matrix(*meas.attitude) @ arm_w.force)
        y = np.concatenate([meas.position, meas.velocity, u.to_vector()])
        o = self.estimator.step(t, y, u)
        return (o.state[6:9], o.gamma_hat, o.cost, o.iterations), [t, *y, *u.to_vector()]

    def _row(self, t, truth: RigidBodyState, cmd, arm_w, est):
        ref = self.reference(t).position
        F_n, F_l, F_r, slip = self._contact(cmd, arm_w)
        f, g, c, it = est
        return [t, self.control_mode, int(self.plant.mode == "terrestrial"),
                *truth.position, *truth.velocity, *truth.attitude, *truth.omega, *ref,
                cmd.U1, cmd.U2, cmd.U3, cmd.U4, F_n, F_l, F_r, int(slip),
                *arm_w.force, *arm_w.torque, *f, g, c, it,
                float(np.linalg.norm(truth.position - ref))]

    def _metrics(self, cols) -> Metrics:
        if not cols or len(cols["t"]) == 0:
            return empty_metrics()
        m = self.sc.doc["metrics"]
        P = np.column_stack([cols["x"], cols["y"], cols["z"]])
        R = np.column_stack([cols["ref_x"], cols["ref_y"], cols["ref_z"]])
        settle = min(float(m["settle_time"]), float(cols["t"][-1]))
        return compute_tracking_metrics(cols["t"], P, R, settle, cols["U1"], cols["gamma_hat"],
                                        self.surf.gamma if self.surf.in_contact else None,
                                        float(m["gamma_window"]))


def _columns(rows) -> dict:
    if not rows:
        return {c: np.array([]) for c in LOG_COLUMNS}
    out = {}
    for i, c in enumerate(LOG_COLUMNS):
        vals = [r[i] for r in rows]
        out[c] = np.array(vals, dtype=object if c == "mode" else float)
    return out


def run_scenario(scenario: Scenario, out_dir=None, stem: str | None = None,
                 raise_on_abort: bool = True) -> SimResult:
    """Run a scenario; with ``out_dir`` the log, estimator log and sidecar are written there.

    On abort the partial log is kept and ``SimulationAbort`` is raised (or
    returned in the result when ``raise_on_abort`` is false).
    """
    res = Simulation(scenario, out_dir, stem).run()
    if res.abort is not None and raise_on_abort:
        res.abort.result = res
        raise res.abort
    return res
