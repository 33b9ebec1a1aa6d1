"""Aerial rigid-body dynamics and constrained rolling dynamics on a plane."""

from __future__ import annotations

import math

import numpy as np

from ..errors import ContactError, ContactLostError
from ..rotations import body_rates_to_euler_rates, cross3, euler_to_matrix, rot_y
from ..wrench import Wrench
from .frames import rotor_wrench_rolling, world_to_rolling
from .types import (
    RigidBodyState,
    RotorCommand,
    StateDerivative,
    SurfaceModel,
    TerrestrialState,
    VehicleParams,
)

def aerial_derivatives(state: RigidBodyState, cmd: RotorCommand, arm_wrench: Wrench,
                       params: VehicleParams) -> StateDerivative:
    """Free-flight derivative of ``[r, r_dot, eta, omega]``.

    ``arm_wrench`` is the disturbance acting on the vehicle, body frame.
    """
    arm_wrench.expect("body")
    R = euler_to_matrix(*state.attitude)
    F = np.array([0.0, 0.0, cmd.U1])
    acc = R @ (F + arm_wrench.force) / params.mass
    acc[2] -= params.gravity
    I = params.inertia
    w = state.omega
    wdot = np.linalg.solve(I, cmd.torque + arm_wrench.torque - cross3(w, I @ w))
    eta_dot = body_rates_to_euler_rates(state.attitude, w)
    value = np.concatenate([state.velocity, acc, eta_dot, wdot])
    return StateDerivative(value, accel_world=acc, omega_dot_body=wdot)


def _smooth_sign(x: float, eps: float) -> float:
    if eps <= 0.0:
        return float(np.sign(x))
    return math.tanh(x / eps)


def friction_forces(terr: TerrestrialState, params: VehicleParams, surf: SurfaceModel,
                    v_rx_dot: float, alpha_ddot: float):
    """Rolling friction, wheel inertial force, rolling resistance torque, wheel inertial torque.

    All four are rolling-frame 3-vectors; magnitudes follow the rolling
    resistance model, directions oppose the current motion.
    """
    if not surf.in_contact:
        raise ContactError("friction forces need surface contact")
    l, r = params.half_track, params.wheel_radius
    F_sum = terr.F_left + terr.F_right
    f_roll = np.array([-surf.mu_r * abs(F_sum) * _smooth_sign(terr.v_rx, surf.friction_speed_eps), 0.0, 0.0])
    f_wh = np.array([2.0 * params.wheel_inertia * v_rx_dot / r**2, 0.0, 0.0])
    tau_roll = np.array([0.0, 0.0, -l * surf.mu_r * abs(terr.F_left - terr.F_right)
                         * _smooth_sign(terr.alpha_rate, surf.friction_speed_eps)])
    tau_wh = np.array([0.0, 0.0, 2.0 * params.wheel_inertia * alpha_ddot * l**2 / r**2])
    return f_roll, f_wh, tau_roll, tau_wh


def com_gravity_torque(params: VehicleParams, f_g, tilt: float = 0.0) -> np.ndarray:
    """Torque of the weight about the body origin when the centre of mass is offset."""
    return cross3(rot_y(tilt) @ params.com_offset, np.asarray(f_g, dtype=float))


def gravity_rolling(params: VehicleParams, surf: SurfaceModel, alpha: float) -> np.ndarray:
    """Weight as an upward-pointing vector ``m R_w->r [0, 0, g]``."""
    return params.mass * params.gravity * world_to_rolling(surf, alpha)[:, 2]


def terrestrial_derivatives(terr: TerrestrialState, cmd: RotorCommand, arm_wrench_r: Wrench,
                            surf: SurfaceModel, params: VehicleParams):
    """Rolling-mode derivative of ``[s1, s2, alpha, alpha_dot, beta, beta_dot, v_rx]``.

    ``arm_wrench_r`` is the wrench the vehicle exerts on the arm, rolling
    frame. Returns ``(derivative, F_n, F_left, F_right, slip_flag)``.
    """
    if not surf.in_contact:
        raise ContactError("terrestrial dynamics need surface contact")
    arm_wrench_r.expect("rolling")
    m = params.mass
    l, r, I_wh = params.half_track, params.wheel_radius, params.wheel_inertia
    alpha, beta = terr.alpha, terr.beta

    f_g = gravity_rolling(params, surf, alpha)
    F_r, M_r = rotor_wrench_rolling(cmd, beta)
    f0, n0 = arm_wrench_r.force, arm_wrench_r.torque
    tau_g = com_gravity_torque(params, f_g, beta)

    # normal balance
    F_n = f_g[2] + f0[2] - F_r[2]
    if F_n < 0.0:
        raise ContactLostError(f"normal force {F_n:.4f} N < 0", normal_force=F_n)
    M_net = M_r - tau_g - n0
    # roll balance about x_r fixes the load difference (left wheel on +y_r)
    diff = -M_net[0] / l
    F_left = 0.5 * (F_n + diff)
    F_right = 0.5 * (F_n - diff)
    wheel_lift = False
    if F_left < 0.0:
        F_left, F_right, wheel_lift = 0.0, F_n, True
    elif F_right < 0.0:
        F_left, F_right, wheel_lift = F_n, 0.0, True
    loaded = TerrestrialState(terr.surface_xy, alpha, terr.alpha_rate, beta, terr.beta_rate,
                              terr.v_rx, F_n, F_left, F_right)

    f_roll, _, tau_roll, _ = friction_forces(loaded, params, surf, 0.0, 0.0)
    drive = F_r[0] - f_g[0] - f0[0]
    if surf.stiction_force > 0.0 and abs(terr.v_rx) < surf.friction_speed_eps \
            and abs(drive) <= surf.stiction_force:
        v_dot = 0.0
    else:
        # wheel inertia folded into the effective mass
        v_dot = (drive + f_roll[0]) / (m + 2.0 * I_wh / r**2)

    I_r = rot_y(beta) @ params.inertia @ rot_y(beta).T
    I_yy, I_zz = I_r[1, 1], I_r[2, 2]
    # d(I_zz)/d(beta) for the tilted body inertia
    dR = np.array([[-math.sin(beta), 0.0, math.cos(beta)], [0.0, 0.0, 0.0],
                   [-math.cos(beta), 0.0, -math.sin(beta)]])
    dI = dR @ params.inertia @ rot_y(beta).T + rot_y(beta) @ params.inertia @ dR.T
    dIzz = dI[2, 2]
    a_dot, b_dot = terr.alpha_rate, terr.beta_rate
    alpha_dd = (M_net[2] + tau_roll[2] - dIzz * b_dot * a_dot) / (I_zz + 2.0 * I_wh * l**2 / r**2)
    beta_dd = (M_net[1] + 0.5 * dIzz * a_dot**2) / I_yy

    slip = abs(f_g[1] + f0[1]) > surf.mu_smax * F_n

    ca, sa = math.cos(alpha), math.sin(alpha)
    value = np.array([terr.v_rx * ca, terr.v_rx * sa, a_dot, alpha_dd, b_dot, beta_dd, v_dot])

    R_rw = world_to_rolling(surf, alpha).T
    acc_w = v_dot * R_rw[:, 0] + terr.v_rx * a_dot * R_rw[:, 1]
    wd_w = alpha_dd * R_rw[:, 2] + beta_dd * R_rw[:, 1] - b_dot * a_dot * R_rw[:, 0]
    R_bw = R_rw @ rot_y(beta)
    deriv = StateDerivative(value, slip_flag=slip, wheel_lift=wheel_lift,
                            accel_world=acc_w, omega_dot_body=R_bw.T @ wd_w)
    return deriv, F_n, F_left, F_right, slip


def terrestrial_energy(terr: TerrestrialState, surf: SurfaceModel, params: VehicleParams) -> float:
    """Kinetic plus potential energy of the rolling model, wheel spin included.

    Exact for a centred mass.  A nonzero ``com_offset`` enters the dynamics
    only as a gravity torque, which is not energy-consistent, so the balance
    against rotor work then holds only to first order in the offset.
    """
    from .frames import from_surface_coords

    I_r = rot_y(terr.beta) @ params.inertia @ rot_y(terr.beta).T
    z = from_surface_coords(surf, [*terr.surface_xy, params.wheel_radius])[2]
    k = 2.0 * params.wheel_inertia / params.wheel_radius**2
    return (0.5 * (params.mass + k) * terr.v_rx**2 + 0.5 * I_r[1, 1] * terr.beta_rate**2
            + 0.5 * (I_r[2, 2] + k * params.half_track**2) * terr.alpha_rate**2
            + params.mass * params.gravity * z)


def rotor_power_terrestrial(terr: TerrestrialState, cmd: RotorCommand) -> float:
    F_r, M_r = rotor_wrench_rolling(cmd, terr.beta)
    return float(F_r[0] * terr.v_rx + M_r[1] * terr.beta_rate + M_r[2] * terr.alpha_rate)
