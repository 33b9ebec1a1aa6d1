"""Elementary rotations and the yaw-roll-pitch (Z-X-Y) Euler convention.

Attitude is parameterised as ``R = Rz(psi) @ Rx(phi) @ Ry(theta)`` so that
pitch is the last rotation, taken about the body y-axis (the wheel axle).
With this ordering the wheel-contact roll/yaw constraints stay valid for
any pitch angle.
"""

from __future__ import annotations

import math

import numpy as np

from .errors import EulerSingularityError

SINGULARITY_TOL = 1e-6


def rot_x(a: float) -> np.ndarray:
    c, s = math.cos(a), math.sin(a)
    return np.array([[1.0, 0.0, 0.0], [0.0, c, -s], [0.0, s, c]])


def rot_y(a: float) -> np.ndarray:
    c, s = math.cos(a), math.sin(a)
    return np.array([[c, 0.0, s], [0.0, 1.0, 0.0], [-s, 0.0, c]])


def rot_z(a: float) -> np.ndarray:
    c, s = math.cos(a), math.sin(a)
    return np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])


def skew(v) -> np.ndarray:
    x, y, z = v
    return np.array([[0.0, -z, y], [z, 0.0, -x], [-y, x, 0.0]])


def wrap_angle(a):
    """Wrap to (-pi, pi]."""
    w = np.mod(-np.asarray(a, dtype=float) + math.pi, 2.0 * math.pi)
    w = math.pi - w
    if np.ndim(w) == 0:
        return float(w)
    return w


def euler_to_matrix(phi: float, theta: float, psi: float) -> np.ndarray:
    """Body-to-world rotation for roll ``phi``, pitch ``theta``, yaw ``psi``."""
    return rot_z(psi) @ rot_x(phi) @ rot_y(theta)


def matrix_to_euler(R: np.ndarray) -> np.ndarray:
    """Inverse of :func:`euler_to_matrix`; returns ``[phi, theta, psi]``."""
    phi = math.atan2(R[2, 1], math.hypot(R[2, 0], R[2, 2]))
    theta = math.atan2(-R[2, 0], R[2, 2])
    psi = math.atan2(-R[0, 1], R[1, 1])
    return np.array([phi, theta, psi])


def euler_rate_matrix(phi: float, theta: float) -> np.ndarray:
    """W such that body rate ``omega = W @ [phi_dot, theta_dot, psi_dot]``.

    Singular when ``cos(phi) == 0``.
    """
    cf, sf = math.cos(phi), math.sin(phi)
    ct, st = math.cos(theta), math.sin(theta)
    return np.array([[ct, 0.0, -st * cf], [0.0, 1.0, sf], [st, 0.0, ct * cf]])


def body_rates_to_euler_rates(eta, omega) -> np.ndarray:
    phi, theta, _ = eta
    cf, sf = math.cos(phi), math.sin(phi)
    if abs(cf) < SINGULARITY_TOL:
        raise EulerSingularityError(f"roll {phi:.6f} at the Euler singularity")
    ct, st = math.cos(theta), math.sin(theta)
    p, q, r = omega
    phi_dot = ct * p + st * r
    psi_dot = (-st * p + ct * r) / cf
    theta_dot = q - sf * psi_dot
    return np.array([phi_dot, theta_dot, psi_dot])


def is_rotation(R: np.ndarray, tol: float = 1e-12) -> bool:
    return bool(
        np.allclose(R.T @ R, np.eye(3), atol=tol, rtol=0.0)
        and abs(np.linalg.det(R) - 1.0) < tol * 10
    )


def cross3(a, b) -> np.ndarray:
    """Cross product of two 3-vectors (much cheaper than ``np.cross`` for single vectors)."""
    a0, a1, a2 = a
    b0, b1, b2 = b
    return np.array([a1 * b2 - a2 * b1, a2 * b0 - a0 * b2, a0 * b1 - a1 * b0])
