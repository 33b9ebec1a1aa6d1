"""Cascaded position/attitude control used in flight, with arm-wrench compensation."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ..errors import InfeasibleCommandError
from ..rotations import cross3, rot_z, wrap_angle
from ..vehicle.types import RigidBodyState, RotorCommand, VehicleParams
from .pid import Pid, PidGains


@dataclass(frozen=True)
class ReferenceState:
    position: np.ndarray = field(default_factory=lambda: np.zeros(3))
    velocity: np.ndarray = field(default_factory=lambda: np.zeros(3))
    acceleration: np.ndarray = field(default_factory=lambda: np.zeros(3))
    yaw: float = 0.0
    t: float = 0.0

    def __post_init__(self):
        for name in ("position", "velocity", "acceleration"):
            object.__setattr__(self, name, np.asarray(getattr(self, name), dtype=float).reshape(3))


@dataclass(frozen=True)
class AttitudeSetpoint:
    phi_d: float
    theta_d: float
    psi_d: float
    U1: float


class PositionCascade:
    """Position PID feeding a velocity PID; the output is a desired acceleration."""

    def __init__(self, pos_gains: PidGains, vel_gains: PidGains):
        self.pos = Pid(pos_gains)
        self.vel = Pid(vel_gains)

    def reset(self):
        self.pos.reset()
        self.vel.reset()

    def acceleration(self, state: RigidBodyState, ref: ReferenceState, dt: float) -> np.ndarray:
        p_err = ref.position - state.position
        v_sp = self.pos.update(p_err, dt, error_rate=ref.velocity - state.velocity) + ref.velocity
        return self.vel.update(v_sp - state.velocity, dt) + ref.acceleration


def aerial_position_control(state: RigidBodyState, ref: ReferenceState, cascade: PositionCascade,
                            dt: float, mass: float) -> np.ndarray:
    """Desired net force (gravity excluded) in the world frame."""
    return mass * cascade.acceleration(state, ref, dt)


def attitude_determination(F_d, psi: float, arm_force_world, params: VehicleParams,
                           psi_d: float | None = None) -> AttitudeSetpoint:
    """Roll/pitch setpoint and thrust that realise ``F_d`` with the arm force cancelled.

    ``arm_force_world`` is the arm's reaction force acting on the vehicle.
    The thrust vector is ``F_d + m g z - f_arm``; roll and pitch are its
    exact yaw-roll-pitch decomposition, so rotating ``[0, 0, U1]`` back
    reproduces it.
    """
    T = np.asarray(F_d, dtype=float) - np.asarray(arm_force_world, dtype=float)
    T[2] += params.mass * params.gravity
    if T[2] <= 0.0:
        raise InfeasibleCommandError(f"thrust would point downward (T_z={T[2]:.4f} N)")
    Tb = rot_z(-psi) @ T
    phi = math.atan2(-Tb[1], Tb[2])
    theta = math.atan2(Tb[0], math.hypot(Tb[1], Tb[2]))
    return AttitudeSetpoint(phi, theta, psi if psi_d is None else psi_d, float(np.linalg.norm(T)))


class AttitudeController:
    """Angle P(ID) -> body-rate setpoint -> rate PID -> torque.

    Torque is ``I * alpha_cmd + omega x I omega`` minus the arm disturbance
    torque, so a perfect arm model cancels the interference exactly.
    """

    def __init__(self, angle_gains: PidGains, rate_gains: PidGains, max_rate: float = 3.0):
        self.angle = Pid(angle_gains)
        self.rate = Pid(rate_gains)
        self.max_rate = max_rate

    def reset(self):
        self.angle.reset()
        self.rate.reset()

    def torque(self, sp: AttitudeSetpoint, state: RigidBodyState, dt: float,
               inertia: np.ndarray, arm_torque_body=np.zeros(3)) -> np.ndarray:
        err = np.array([sp.phi_d, sp.theta_d, sp.psi_d]) - state.attitude
        err[2] = wrap_angle(err[2])
        rate_sp = np.clip(self.angle.update(err, dt), -self.max_rate, self.max_rate)
        acc = self.rate.update(rate_sp - state.omega, dt)
        w = state.omega
        return inertia @ acc + cross3(w, inertia @ w) - np.asarray(arm_torque_body, dtype=float)


def attitude_rate_loop(sp: AttitudeSetpoint, state: RigidBodyState, ctrl: AttitudeController,
                       dt: float, params: VehicleParams, mode: str = "aerial",
                       arm_torque_body=np.zeros(3), inertia=None) -> RotorCommand:
    """Rotor command from an attitude setpoint. Terrestrial mode zeroes the roll setpoint."""
    if mode == "terrestrial":
        sp = AttitudeSetpoint(0.0, sp.theta_d, sp.psi_d, sp.U1)
    I = params.inertia if inertia is None else inertia
    tau = ctrl.torque(sp, state, dt, I, arm_torque_body)
    return RotorCommand(sp.U1, *tau)
