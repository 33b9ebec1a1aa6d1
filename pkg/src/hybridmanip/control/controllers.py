"""Mode controllers run at the control rate by the simulator."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ..arm import ArmModel, ArmState
from ..rotations import cross3, euler_to_matrix, rot_y, wrap_angle
from ..vehicle.frames import (
    rigid_to_terrestrial,
    to_surface_coords,
    world_to_rolling,
)
from ..vehicle.types import RigidBodyState, RotorCommand, SurfaceModel, VehicleParams
from ..wrench import Wrench
from .aerial import (
    AttitudeController,
    AttitudeSetpoint,
    PositionCascade,
    ReferenceState,
    attitude_determination,
    attitude_rate_loop,
)
from .pid import Pid, PidGains
from .terrestrial import (
    LOS_GAIN_SCHEDULE,
    THRUST_SCHEDULE,
    LosGuidance,
    terrestrial_position_control,
    thrust_pitch_determination,
)


def _pid(d, dim=3):
    return PidGains.from_dict(d, dim)


@dataclass
class ControlConfig:
    """Gains and schedule constants; every field is overridable from a scenario."""

    position: dict = field(default_factory=lambda: {"kp": 2.0, "kd": 0.0, "ki": 0.0})
    velocity: dict = field(default_factory=lambda: {"kp": 4.0, "ki": 1.0, "integral_limit": 0.5})
    angle: dict = field(default_factory=lambda: {"kp": [8.0, 8.0, 4.0]})
    rate: dict = field(default_factory=lambda: {"kp": [40.0, 40.0, 20.0], "ki": [5.0, 5.0, 2.0],
                                                "integral_limit": 0.2})
    max_rate: float = 3.0
    terrestrial_position: dict = field(default_factory=lambda: {"kp": 2.0})
    terrestrial_velocity: dict = field(default_factory=lambda: {"kp": 4.0, "ki": 1.0,
                                                                "integral_limit": 0.5})
    tilt_angle_kp: float = 15.0
    tilt_rate: dict = field(default_factory=lambda: {"kp": 60.0, "ki": 5.0, "integral_limit": 0.2})
    heading_rate: dict = field(default_factory=lambda: {"kp": 20.0, "ki": 2.0, "integral_limit": 0.2})
    heading_align_gain: float = 2.0
    max_heading_rate: float = 2.0
    # drive backwards once the heading target is this far behind (rad); > pi disables
    reverse_threshold: float = math.radians(110.0)
    lookahead_time: float = 0.3
    lookahead_distance: float = 0.05  # carrot is kept at least this far along the path
    tilt_ff_cutoff_hz: float = 20.0
    los_deadband: float = 0.01
    los_cutoff_hz: float = 5.0
    los_gain_coeffs: tuple = LOS_GAIN_SCHEDULE
    thrust_schedule: tuple = THRUST_SCHEDULE
    min_normal_force_ratio: float = 0.2
    arm_compensation: bool = True


class ArmCompensator:
    """Model-based arm reaction wrench for feedforward cancellation."""

    def __init__(self, model: ArmModel | None, enabled: bool = True):
        self.model = model
        self.enabled = enabled and model is not None

    def reaction_body(self, state: RigidBodyState, arm: ArmState | None, accel_world,
                      gravity: float) -> Wrench:
        if self.model is None or arm is None:
            return Wrench.zero("body")
        R = euler_to_matrix(*state.attitude)
        a = np.asarray(accel_world, dtype=float) + np.array([0.0, 0.0, gravity])
        if not self.enabled:
            # arm mass known, its motion not: lumped point mass at the body origin
            return Wrench(-self.model.mass * (R.T @ a), np.zeros(3), "body")
        return self.model.reaction_on_vehicle(arm, R.T @ a, state.omega, np.zeros(3))

    def inertia(self, base: np.ndarray, arm: ArmState | None) -> np.ndarray:
        if not self.enabled or arm is None:
            return base
        return base + self.model.inertia_about_body(arm)[2]


class AerialController:
    def __init__(self, params: VehicleParams, cfg: ControlConfig, arm_model: ArmModel | None = None):
        self.params = params
        self.cfg = cfg
        self.cascade = PositionCascade(_pid(cfg.position), _pid(cfg.velocity))
        self.attitude = AttitudeController(_pid(cfg.angle), _pid(cfg.rate), cfg.max_rate)
        self.arm = ArmCompensator(arm_model, cfg.arm_compensation)
        self.last_accel = np.zeros(3)
        self.last_setpoint = None

    def reset(self):
        self.cascade.reset()
        self.attitude.reset()

    def update(self, meas: RigidBodyState, ref: ReferenceState, dt: float,
               arm_state: ArmState | None = None) -> RotorCommand:
        p = self.params
        acc = self.cascade.acceleration(meas, ref, dt)
        F_d = p.mass * acc
        react = self.arm.reaction_body(meas, arm_state, self.last_accel, p.gravity)
        R = euler_to_matrix(*meas.attitude)
        sp = attitude_determination(F_d, meas.attitude[2], R @ react.force, p, psi_d=ref.yaw)
        self.last_accel = acc
        self.last_setpoint = sp
        inertia = self.arm.inertia(p.inertia, arm_state)
        cmd = attitude_rate_loop(sp, meas, self.attitude, dt, p, "aerial",
                                 arm_torque_body=react.torque, inertia=inertia)
        return cmd.clipped(p)


def s_vel_ref(ref: ReferenceState, surf: SurfaceModel) -> np.ndarray:
    """Reference velocity in plane coordinates."""
    return (world_to_rolling(surf, 0.0) @ ref.velocity)[:2]


def path_heading_rate(ref: ReferenceState, surf: SurfaceModel, speed: float | None = None) -> float:
    """Turn rate of the reference path on the plane; with ``speed``, the path
    curvature times that speed."""
    R = world_to_rolling(surf, 0.0)
    v = R @ ref.velocity
    a = R @ ref.acceleration
    v2 = v[0] ** 2 + v[1] ** 2
    if v2 < 1e-8:
        return 0.0
    rate = (v[0] * a[1] - v[1] * a[0]) / v2
    if speed is not None:
        rate *= speed / math.sqrt(v2)
    return float(rate)


class TerrestrialController:
    """Rolling-mode control; torques are designed in the rolling frame and mapped to the body.

    Tilt about the axle tracks the resolved tilt; the surface-normal rate
    tracks the heading-rate command; no roll torque is requested beyond
    cancelling the model disturbances (roll is fixed by the wheels).
    """

    def __init__(self, params: VehicleParams, cfg: ControlConfig, arm_model: ArmModel | None = None):
        self.params = params
        self.cfg = cfg
        self.cascade = PositionCascade(_pid(cfg.terrestrial_position), _pid(cfg.terrestrial_velocity))
        self.tilt_rate = Pid(_pid(cfg.tilt_rate, 1))
        self.heading = Pid(_pid(cfg.heading_rate, 1))
        self.los = LosGuidance(cfg.los_deadband, cfg.los_cutoff_hz, cfg.los_gain_coeffs)
        self.los_ref = LosGuidance(cfg.los_deadband, cfg.los_cutoff_hz, cfg.los_gain_coeffs)
        self.arm = ArmCompensator(arm_model, cfg.arm_compensation)
        self.last_accel = np.zeros(3)
        self.last_solution = None
        self.last_heading_cmd = 0.0
        self._tilt_prev = None
        self._tilt_rate_ff = 0.0
        self.reversed = False

    def reset(self):
        self.cascade.reset()
        self.tilt_rate.reset()
        self.heading.reset()
        self.los.reset()
        self.los_ref.reset()
        self._tilt_prev = None
        self._tilt_rate_ff = 0.0
        self.reversed = False

    def _tilt_feedforward(self, tilt: float, dt: float) -> float:
        if self._tilt_prev is not None:
            raw = wrap_angle(tilt - self._tilt_prev) / dt
            tau = 1.0 / (2.0 * math.pi * self.cfg.tilt_ff_cutoff_hz) if self.cfg.tilt_ff_cutoff_hz > 0 else 0.0
            self._tilt_rate_ff += dt / (tau + dt) * (raw - self._tilt_rate_ff)
        self._tilt_prev = tilt
        return self._tilt_rate_ff

    def update(self, meas: RigidBodyState, ref: ReferenceState, carrot, dt: float,
               surf: SurfaceModel, arm_state: ArmState | None = None,
               anchor: ReferenceState | None = None) -> RotorCommand:
        """``anchor`` is the path point nearest the vehicle (defaults to ``ref``); the
        heading law works relative to it, the along-track loop relative to ``ref``."""
        p, cfg = self.params, self.cfg
        anchor = ref if anchor is None else anchor
        terr = rigid_to_terrestrial(meas, surf, p)
        alpha, beta = terr.alpha, terr.beta
        R_wr = world_to_rolling(surf, alpha)
        a_rx = terrestrial_position_control(meas, ref, self.cascade, R_wr, dt)

        # arm model, rolling frame
        react = self.arm.reaction_body(meas, arm_state, self.last_accel, p.gravity)
        R_br = rot_y(beta)
        f0_r = -(R_br @ react.force)
        n0_r = -(R_br @ react.torque)

        # heading
        s_pos = to_surface_coords(surf, meas.position)[:2]
        s_tgt = to_surface_coords(surf, carrot)[:2]
        s_ref = to_surface_coords(surf, anchor.position)[:2]
        s_vel = (world_to_rolling(surf, 0.0) @ meas.velocity)[:2]
        v_ref = s_vel_ref(anchor, surf)
        K_los = self.los.update(s_pos, s_tgt, s_vel, surf.gamma, dt)
        # same law seen from the reference point; its rate is the nominal LOS rate of the path
        K_ref = self.los_ref.update(s_ref, s_tgt, v_ref, surf.gamma, dt)
        w_ff = path_heading_rate(anchor, surf, terr.v_rx)
        if self.los.q is not None:
            rate_cmd = K_los + w_ff
            if self.los_ref.q is not None and np.hypot(*v_ref) > 1e-6:
                # heading target: path tangent, offset by how far the line of sight deviates
                # from the nominal one (no chord cutting on curves)
                rate_cmd -= K_ref
                alpha_d = math.atan2(v_ref[1], v_ref[0]) + wrap_angle(self.los.q - self.los_ref.q)
            else:
                alpha_d = self.los.q
            # hysteresis between the two driving directions
            if self.reversed:
                alpha_d += math.pi
            if abs(wrap_angle(alpha_d - alpha)) > cfg.reverse_threshold:
                self.reversed = not self.reversed
                alpha_d += math.pi
            rate_cmd += cfg.heading_align_gain * wrap_angle(alpha_d - alpha)
        else:
            rate_cmd = w_ff
        rate_cmd = float(np.clip(rate_cmd, -cfg.max_heading_rate, cfg.max_heading_rate))
        self.last_heading_cmd = rate_cmd

        # thrust and tilt
        f_wh = np.array([2.0 * p.wheel_inertia * a_rx / p.wheel_radius**2, 0.0, 0.0])
        sign = math.tanh(terr.v_rx / surf.friction_speed_eps) if surf.friction_speed_eps > 0 else 1.0
        sol = thrust_pitch_determination(
            a_rx, surf.gamma, alpha, f0_r, f_wh, p, surf, motion_sign=sign,
            min_normal_force=cfg.min_normal_force_ratio * p.weight, schedule=cfg.thrust_schedule)
        self.last_solution = sol
        self.last_accel = a_rx * R_wr[0]

        I = self.arm.inertia(p.inertia, arm_state)
        I_r = R_br @ I @ R_br.T
        rate_sp = cfg.tilt_angle_kp * wrap_angle(sol.tilt - beta) + self._tilt_feedforward(sol.tilt, dt)
        beta_acc = self.tilt_rate.update([rate_sp - terr.beta_rate], dt)[0]
        alpha_acc = self.heading.update([rate_cmd - terr.alpha_rate], dt)[0]
        I_zz_eff = I_r[2, 2] + 2.0 * p.wheel_inertia * p.half_track**2 / p.wheel_radius**2
        f_g = p.mass * p.gravity * R_wr[:, 2]
        tau_g = cross3(R_br @ p.com_offset, f_g)
        M_r = n0_r + tau_g + np.array([0.0, I_r[1, 1] * beta_acc, I_zz_eff * alpha_acc])
        M_b = R_br.T @ M_r
        return RotorCommand(sol.U1, *M_b).clipped(p)

    def tilt_setpoint(self) -> AttitudeSetpoint | None:
        s = self.last_solution
        return None if s is None else AttitudeSetpoint(0.0, s.theta_d, 0.0, s.U1)
