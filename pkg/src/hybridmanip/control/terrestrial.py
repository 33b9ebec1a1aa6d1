"""Rolling-mode control: projected position loop, LOS heading law, thrust/tilt resolution."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..errors import InfeasibleCommandError, NumericalFailure
from ..rotations import wrap_angle
from ..vehicle.frames import contact_attitude
from ..vehicle.types import RigidBodyState, SurfaceModel, VehicleParams
from .aerial import PositionCascade, ReferenceState

# Polynomial coefficients, highest power first.
THRUST_SCHEDULE = (-0.002, 0.0179, 0.6728)  # |F| / (m g) vs inclination in rad
LOS_GAIN_SCHEDULE = (0.137, 1.1051)  # K vs inclination in degrees


def thrust_schedule(gamma: float, coeffs=THRUST_SCHEDULE) -> float:
    """Scheduled thrust as a fraction of the chassis weight (``gamma`` in rad)."""
    return float(np.polyval(coeffs, gamma))


def los_gain(gamma: float, coeffs=LOS_GAIN_SCHEDULE) -> float:
    """Proportional-navigation gain; ``gamma`` in rad, the fit is evaluated in degrees."""
    return float(np.polyval(coeffs, math.degrees(gamma)))


def terrestrial_position_control(state: RigidBodyState, ref: ReferenceState,
                                 cascade: PositionCascade, R_wr: np.ndarray, dt: float) -> float:
    """Desired acceleration along the rolling x-axis."""
    acc_w = cascade.acceleration(state, ref, dt)
    return float(R_wr[0] @ acc_w)


class LosGuidance:
    """Heading-rate command ``K(gamma) dq/dt`` from the line-of-sight angle.

    ``q`` is differenced backward and low-pass filtered. Inside the
    deadband the filter is reset and the command is zero.
    """

    def __init__(self, deadband: float = 0.01, cutoff_hz: float = 5.0,
                 gain_coeffs=LOS_GAIN_SCHEDULE):
        self.deadband = deadband
        self.cutoff_hz = cutoff_hz
        self.gain_coeffs = gain_coeffs
        self.reset()

    def reset(self):
        self.q = None
        self.q_rate = 0.0
        self.sigma = None

    def update(self, position, target, velocity, gamma: float, dt: float) -> float:
        d = np.asarray(target, dtype=float) - np.asarray(position, dtype=float)
        if np.hypot(*d) <= self.deadband:
            self.reset()
            return 0.0
        q = math.atan2(d[1], d[0])
        v = np.asarray(velocity, dtype=float)
        self.sigma = math.atan2(v[1], v[0]) if np.hypot(*v) > 1e-9 else None
        if self.q is not None:
            raw = wrap_angle(q - self.q) / dt
            tau = 1.0 / (2.0 * math.pi * self.cutoff_hz) if self.cutoff_hz > 0 else 0.0
            self.q_rate += dt / (tau + dt) * (raw - self.q_rate)
        self.q = q
        return los_gain(gamma, self.gain_coeffs) * self.q_rate


def los_yaw_rate(guidance: LosGuidance, position, target, velocity, gamma: float, dt: float) -> float:
    return guidance.update(position, target, velocity, gamma, dt)


@dataclass(frozen=True)
class TiltSolution:
    theta_d: float  # pitch setpoint, tilt minus the slope along the heading
    tilt: float  # body tilt in the rolling frame
    U1: float
    F_n: float
    residual: float  # max abs residual of the tangential/normal balances, N
    scheduled: bool  # False when the thrust had to leave the schedule


def thrust_pitch_determination(a_rx_d: float, gamma: float, alpha: float,
                               arm_force_r, f_wh, params: VehicleParams, surf: SurfaceModel,
                               motion_sign: float = 1.0, min_normal_force: float = 0.0,
                               schedule=THRUST_SCHEDULE, tol: float = 1e-8) -> TiltSolution:
    """Solve thrust, tilt and normal force from the along-track and normal balances.

    ``arm_force_r`` is the force the vehicle exerts on the arm and ``f_wh``
    the wheel inertial force, both rolling frame. The thrust comes from the
    inclination schedule; when no normal force ``>= min_normal_force``
    is compatible with it, the thrust is instead set so that the normal
    force equals ``min_normal_force``.
    """
    m, g, mu = params.mass, params.gravity, surf.mu_r * motion_sign
    f0 = np.asarray(arm_force_r, dtype=float)
    fw = np.asarray(f_wh, dtype=float)
    U_sched = thrust_schedule(gamma, schedule) * m * g
    if U_sched <= 0.0:
        raise InfeasibleCommandError(f"thrust schedule gives {U_sched:.4f} N at gamma={gamma:.4f}")
    N0 = m * a_rx_d + m * g * math.cos(alpha) * math.sin(gamma) + f0[0] + fw[0]
    D0 = m * g * math.cos(gamma) + f0[2] + fw[2]

    # (N0 + mu F)^2 + (D0 - F)^2 = U^2
    A = 1.0 + mu * mu
    B = 2.0 * (mu * N0 - D0)
    C = N0 * N0 + D0 * D0 - U_sched * U_sched
    disc = B * B - 4.0 * A * C
    F_n = None
    if disc >= 0.0:
        sq = math.sqrt(disc)
        # numerically stable pair
        qq = -0.5 * (B + math.copysign(sq, B))
        roots = sorted(r for r in ((qq / A) if A else math.inf, (C / qq) if qq else math.inf)
                       if math.isfinite(r))
        for r in roots:
            if r >= min_normal_force:
                F_n = r
                break
    scheduled = F_n is not None
    if scheduled:
        U1 = U_sched
    else:
        F_n = max(min_normal_force, 0.0)
    N = N0 + mu * F_n
    D = D0 - F_n
    if not scheduled:
        U1 = math.hypot(N, D)
    tilt = math.atan2(N, D)
    res = max(abs(U1 * math.sin(tilt) - N), abs(U1 * math.cos(tilt) - D))
    if res > tol * max(1.0, U1):
        raise NumericalFailure(f"tilt/thrust back-substitution residual {res:.3e}")
    delta = contact_attitude(gamma, alpha)[2]
    return TiltSolution(tilt - delta, tilt, U1, F_n, res, scheduled)


def balance_residual(sol: TiltSolution, a_rx_d, gamma, alpha, arm_force_r, f_wh,
                     params: VehicleParams, surf: SurfaceModel, motion_sign: float = 1.0):
    """Residuals of the along-track and normal balances at a candidate solution.

    Written from the force balances directly (weight, rotor force, arm,
    wheel inertia, rolling friction), independent of the quadratic solve.
    """
    from ..vehicle.dynamics import gravity_rolling
    from ..vehicle.frames import rotor_wrench_rolling
    from ..vehicle.types import RotorCommand

    f_g = gravity_rolling(params, surf.with_(gamma=gamma, azimuth=0.0), alpha)
    F_r, _ = rotor_wrench_rolling(RotorCommand(sol.U1), sol.tilt)
    f0 = np.asarray(arm_force_r, dtype=float)
    fw = np.asarray(f_wh, dtype=float)
    along = (F_r[0] - f_g[0] - fw[0] - motion_sign * surf.mu_r * sol.F_n - f0[0]) - params.mass * a_rx_d
    normal = sol.F_n + F_r[2] - f_g[2] - f0[2] - fw[2]
    return along, normal
