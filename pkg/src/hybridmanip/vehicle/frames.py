"""Rolling-frame geometry for a vehicle in full wheel contact with a plane."""

from __future__ import annotations

import math

import numpy as np

from ..rotations import euler_to_matrix, matrix_to_euler, rot_y, rot_z, wrap_angle
from .types import RigidBodyState, RotorCommand, SurfaceModel, TerrestrialState, VehicleParams


def contact_attitude(gamma: float, alpha: float) -> tuple[float, float, float]:
    """Roll, yaw increment and along-heading slope for full wheel contact.

    Returns ``(phi, delta_psi, delta)``. Two-argument arctangents keep the
    vertical-wall case finite.
    """
    sg, cg = math.sin(gamma), math.cos(gamma)
    if gamma == math.pi / 2:
        # cos(pi/2) rounds to 6e-17, which turns sideways travel on a wall into yaw pi/4
        cg = 0.0
    sa, ca = math.sin(alpha), math.cos(alpha)
    phi = math.atan2(-sg * sa, math.sqrt(ca * ca + sa * sa * cg * cg))
    if gamma == 0.0:
        # exact on the floor; wrapping an in-range angle would cost an ulp
        delta_psi = alpha if -math.pi < alpha <= math.pi else wrap_angle(alpha)
    else:
        delta_psi = math.atan2(cg * sa, ca)
    delta = math.atan2(sg * ca, math.sqrt(sa * sa + ca * ca * cg * cg))
    return phi, delta_psi, delta


def rolling_rotations(gamma, alpha, psi, delta, theta) -> tuple[np.ndarray, np.ndarray]:
    """``(R_w->r, R_b->r)``: world-to-rolling and body-to-rolling rotations."""
    _, dpsi, _ = contact_attitude(gamma, alpha)
    R_wr = rot_z(-alpha) @ rot_y(gamma) @ rot_z(dpsi - psi)
    R_br = rot_y(delta + theta)
    return R_wr, R_br


def rotor_wrench_rolling(cmd: RotorCommand, tilt: float) -> tuple[np.ndarray, np.ndarray]:
    """Rotor force and torque in the rolling frame for body tilt ``delta + theta``."""
    c, s = math.cos(tilt), math.sin(tilt)
    F_r = np.array([cmd.U1 * s, 0.0, cmd.U1 * c])
    M_r = np.array([cmd.U2 * c + cmd.U4 * s, cmd.U3, -cmd.U2 * s + cmd.U4 * c])
    return F_r, M_r


# --- plane bookkeeping -----------------------------------------------------

def surface_rotation(surf: SurfaceModel) -> np.ndarray:
    """World-to-surface rotation; surface x points up-slope, z along the normal."""
    return rot_y(surf.gamma) @ rot_z(-surf.azimuth)


def surface_normal(surf: SurfaceModel) -> np.ndarray:
    return surface_rotation(surf)[2, :].copy()


def world_to_rolling(surf: SurfaceModel, alpha: float) -> np.ndarray:
    """Same as the first output of :func:`rolling_rotations` for a vehicle in contact."""
    return rot_z(-alpha) @ surface_rotation(surf)


def to_surface_coords(surf: SurfaceModel, p_world) -> np.ndarray:
    """Plane coordinates ``(s1, s2, height)`` of a world point."""
    return surface_rotation(surf) @ (np.asarray(p_world, dtype=float) - surf.origin)


def from_surface_coords(surf: SurfaceModel, s) -> np.ndarray:
    s = np.asarray(s, dtype=float)
    if s.shape == (2,):
        s = np.array([s[0], s[1], 0.0])
    return surf.origin + surface_rotation(surf).T @ s


def surface_heading(surf: SurfaceModel, direction_world) -> float:
    """Heading angle on the plane of a world direction (its in-plane part)."""
    d = surface_rotation(surf) @ np.asarray(direction_world, dtype=float)
    return math.atan2(d[1], d[0])


def terrestrial_body_rotation(surf: SurfaceModel, alpha: float, beta: float) -> np.ndarray:
    return world_to_rolling(surf, alpha).T @ rot_y(beta)


def slope_angle(surf: SurfaceModel, alpha: float) -> float:
    return contact_attitude(surf.gamma, alpha)[2]


def terrestrial_to_rigid(terr: TerrestrialState, surf: SurfaceModel,
                         params: VehicleParams) -> RigidBodyState:
    R_rw = world_to_rolling(surf, terr.alpha).T
    R = R_rw @ rot_y(terr.beta)
    pos = from_surface_coords(surf, [*terr.surface_xy, params.wheel_radius])
    vel = terr.v_rx * R_rw[:, 0]
    w_world = terr.alpha_rate * R_rw[:, 2] + terr.beta_rate * R_rw[:, 1]
    return RigidBodyState(pos, vel, matrix_to_euler(R), R.T @ w_world)


def rigid_to_terrestrial(state: RigidBodyState, surf: SurfaceModel,
                         params: VehicleParams) -> TerrestrialState:
    """Project a free-flight state onto the contact manifold.

    Velocity normal to the plane and across the axle is discarded (plastic
    touchdown); the axle is projected into the plane.
    """
    R = euler_to_matrix(*state.attitude)
    n = surface_normal(surf)
    y = R[:, 1] - (R[:, 1] @ n) * n
    ny = np.linalg.norm(y)
    if ny < 1e-9:
        raise ValueError("axle is normal to the surface; cannot land on wheels")
    y /= ny
    x = np.cross(y, n)
    alpha = surface_heading(surf, x)
    z_b = R[:, 2]
    beta = math.atan2(z_b @ x, z_b @ n)
    s = to_surface_coords(surf, state.position)
    w_world = R @ state.omega
    return TerrestrialState(
        surface_xy=s[:2],
        alpha=alpha,
        alpha_rate=float(w_world @ n),
        beta=beta,
        beta_rate=float(w_world @ y),
        v_rx=float(state.velocity @ x),
    )


def wheel_clearance(state: RigidBodyState, surf: SurfaceModel, params: VehicleParams) -> float:
    """Height of the body centre above the plane minus the wheel radius."""
    return float(to_surface_coords(surf, state.position)[2] - params.wheel_radius)
