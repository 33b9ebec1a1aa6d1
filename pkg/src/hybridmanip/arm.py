"""Kinematics and iterative Newton-Euler dynamics of the onboard arm.

Frames follow the modified (Craig) D-H convention: row ``i`` holds
``alpha_{i-1}, a_{i-1}, d_i, theta_i`` and yields the transform from frame
``S_i`` into ``S_{i-1}``. Link ``i`` is rigidly attached to ``S_i`` for
i = 1..5; ``S_0`` is fixed to the vehicle.

The returned base wrench is the force/torque the vehicle exerts on link 1,
expressed in ``S_0``. The reaction acting on the vehicle is its negative.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .rotations import cross3, wrap_angle
from .wrench import Wrench

N_FRAMES = 5


@dataclass(frozen=True)
class DhRow:
    alpha_prev: float
    a_prev: float
    d: float
    theta: float = 0.0  # joint offset added to the joint variable


@dataclass(frozen=True)
class LinkParams:
    mass: float
    inertia: np.ndarray  # about the centroid, link frame
    centroid: np.ndarray  # in link frame

    def __post_init__(self):
        I = np.asarray(self.inertia, dtype=float)
        if I.shape == (3,):
            I = np.diag(I)
        if not np.allclose(I, I.T, atol=1e-12):
            raise ValueError("link inertia must be symmetric")
        if np.linalg.eigvalsh(I).min() < -1e-12:
            raise ValueError("link inertia must be positive semi-definite")
        if self.mass < 0:
            raise ValueError("negative link mass")
        object.__setattr__(self, "inertia", I)
        object.__setattr__(self, "centroid", np.asarray(self.centroid, dtype=float).reshape(3))

    def scaled(self, k: float) -> "LinkParams":
        return LinkParams(self.mass * k, self.inertia * k, self.centroid)


@dataclass(frozen=True)
class ArmState:
    angles: np.ndarray = field(default_factory=lambda: np.zeros(N_FRAMES))
    rates: np.ndarray = field(default_factory=lambda: np.zeros(N_FRAMES))
    accels: np.ndarray = field(default_factory=lambda: np.zeros(N_FRAMES))

    def __post_init__(self):
        for name in ("angles", "rates", "accels"):
            v = np.asarray(getattr(self, name), dtype=float).reshape(N_FRAMES)
            if not np.all(np.isfinite(v)):
                raise ValueError(f"non-finite arm {name}")
            if name == "angles":
                v = wrap_angle(v)
            object.__setattr__(self, name, v)


# Table of link geometry for the 4-DOF arm (joint 5 is the gripper frame).
DEFAULT_DH = (
    DhRow(0.0, 0.0, 0.0),
    DhRow(0.0, 0.134, 0.0),
    DhRow(-math.pi / 2, 0.028, 0.013),
    DhRow(math.pi / 2, 0.038, 0.0),
    DhRow(-math.pi / 2, 0.034, 0.015),
)
ARM_MASS = 0.18
GRIPPER_LENGTH = 0.05


def dh_transform(row: DhRow, q: float = 0.0) -> np.ndarray:
    """Homogeneous transform ``^{i-1}_i T`` for joint value ``q``."""
    th = row.theta + q
    ca, sa = math.cos(row.alpha_prev), math.sin(row.alpha_prev)
    ct, st = math.cos(th), math.sin(th)
    return np.array(
        [
            [ct, -st, 0.0, row.a_prev],
            [st * ca, ct * ca, -sa, -sa * row.d],
            [st * sa, ct * sa, ca, ca * row.d],
            [0.0, 0.0, 0.0, 1.0],
        ]
    )


def _check_rows(dh: Sequence[DhRow]):
    if len(dh) != N_FRAMES:
        raise ValueError(f"expected {N_FRAMES} D-H rows, got {len(dh)}")


def link_transforms(arm: ArmState, dh: Sequence[DhRow]) -> list[np.ndarray]:
    _check_rows(dh)
    return [dh_transform(row, q) for row, q in zip(dh, arm.angles)]


def forward_kinematics(arm: ArmState, dh: Sequence[DhRow]) -> np.ndarray:
    """``^0_5 T`` as the ordered product of the adjacent transforms."""
    T = np.eye(4)
    for Ti in link_transforms(arm, dh):
        T = T @ Ti
    return T


def newton_euler_base_wrench(
    arm: ArmState,
    links: Sequence[LinkParams],
    dh: Sequence[DhRow],
    base_accel,
    base_omega=(0.0, 0.0, 0.0),
    base_omega_dot=(0.0, 0.0, 0.0),
    tip_wrench: Wrench | None = None,
) -> Wrench:
    """Base wrench ``(^0f_0, ^0n_0)`` from the two-pass recursion.

    ``base_accel`` is the linear acceleration of ``S_0`` minus the gravity
    acceleration vector, i.e. ``R_w^0 (r_ddot - g_vec)`` with ``g_vec``
    pointing down; gravity then enters every link through this term.
    ``tip_wrench`` is the wrench the end effector applies to the
    environment, in ``S5``.
    """
    _check_rows(dh)
    if len(links) != N_FRAMES:
        raise ValueError(f"expected {N_FRAMES} links, got {len(links)}")
    if tip_wrench is None:
        tip_wrench = Wrench.zero("S5")
    tip_wrench.expect("S5")

    Ts = link_transforms(arm, dh)
    z = np.array([0.0, 0.0, 1.0])
    w = np.asarray(base_omega, dtype=float)
    wd = np.asarray(base_omega_dot, dtype=float)
    vd = np.asarray(base_accel, dtype=float)

    F = []
    N = []
    for i in range(N_FRAMES):
        R = Ts[i][:3, :3]
        p = Ts[i][:3, 3]
        Rt = R.T
        qd, qdd = arm.rates[i], arm.accels[i]
        vd = Rt @ (cross3(wd, p) + cross3(w, cross3(w, p)) + vd)
        w_prev = Rt @ w
        w = w_prev + qd * z
        wd = Rt @ wd + cross3(w_prev, qd * z) + qdd * z
        lk = links[i]
        vc = cross3(wd, lk.centroid) + cross3(w, cross3(w, lk.centroid)) + vd
        F.append(lk.mass * vc)
        N.append(lk.inertia @ wd + cross3(w, lk.inertia @ w))

    f = tip_wrench.force.copy()
    n = tip_wrench.torque.copy()
    R_next = np.eye(3)
    p_next = np.zeros(3)
    for i in reversed(range(N_FRAMES)):
        Rf = R_next @ f
        n = N[i] + R_next @ n + cross3(links[i].centroid, F[i]) + cross3(p_next, Rf)
        f = Rf + F[i]
        R_next = Ts[i][:3, :3]
        p_next = Ts[i][:3, 3]
    # massless base link S0
    Rf = R_next @ f
    n0 = R_next @ n + cross3(p_next, Rf)
    return Wrench(Rf, n0, "S0")


@dataclass(frozen=True)
class ArmModel:
    """Geometry, link inertias and mounting of the arm on the vehicle."""

    dh: tuple = DEFAULT_DH
    links: tuple = ()
    base_rotation: np.ndarray = field(default_factory=lambda: np.eye(3))  # R_0^b
    base_offset: np.ndarray = field(default_factory=lambda: np.zeros(3))  # S0 origin, body frame

    def __post_init__(self):
        if not self.links:
            object.__setattr__(self, "links", default_links(self.dh))
        _check_rows(self.dh)
        object.__setattr__(self, "base_rotation", np.asarray(self.base_rotation, dtype=float))
        object.__setattr__(self, "base_offset", np.asarray(self.base_offset, dtype=float))

    @property
    def mass(self) -> float:
        return float(sum(lk.mass for lk in self.links))

    def base_wrench(self, arm: ArmState, accel_body, omega_body, omega_dot_body,
                    tip_wrench: Wrench | None = None) -> Wrench:
        """Wrench the vehicle applies to the arm, expressed in the body frame.

        Inputs are body-frame quantities of the vehicle; ``accel_body`` is
        ``R_w^b (r_ddot - g_vec)``.
        """
        Rt = self.base_rotation.T
        w0 = Rt @ np.asarray(omega_body, dtype=float)
        wd0 = Rt @ np.asarray(omega_dot_body, dtype=float)
        a = np.asarray(accel_body, dtype=float)
        off = self.base_offset
        if np.any(off):
            a = a + cross3(omega_dot_body, off) + cross3(omega_body, cross3(omega_body, off))
        wr = newton_euler_base_wrench(arm, self.links, self.dh, Rt @ a, w0, wd0, tip_wrench)
        f = self.base_rotation @ wr.force
        n = self.base_rotation @ wr.torque + cross3(off, f)
        return Wrench(f, n, "body")

    def reaction_on_vehicle(self, *args, **kwargs) -> Wrench:
        """Disturbance wrench acting on the vehicle (body frame, about the body origin)."""
        return -self.base_wrench(*args, **kwargs)

    def inertia_about_body(self, arm: ArmState) -> tuple[float, np.ndarray, np.ndarray]:
        """Mass, centroid and inertia (about the body origin) of the arm."""
        T = np.eye(4)
        m_tot = 0.0
        c_acc = np.zeros(3)
        I_tot = np.zeros((3, 3))
        for Ti, lk in zip(link_transforms(arm, self.dh), self.links):
            T = T @ Ti
            R = self.base_rotation @ T[:3, :3]
            p = self.base_offset + self.base_rotation @ (T[:3, :3] @ lk.centroid + T[:3, 3])
            I_tot += R @ lk.inertia @ R.T + lk.mass * (p @ p * np.eye(3) - np.outer(p, p))
            c_acc += lk.mass * p
            m_tot += lk.mass
        c = c_acc / m_tot if m_tot > 0 else np.zeros(3)
        return m_tot, c, I_tot


def default_links(dh: Sequence[DhRow] = DEFAULT_DH, total_mass: float = ARM_MASS,
                  gripper_length: float = GRIPPER_LENGTH) -> tuple[LinkParams, ...]:
    """Split ``total_mass`` over the links in proportion to length; slender-rod inertias.

    Link i spans from the origin of ``S_i`` to the origin of ``S_{i+1}``;
    the last link is a rod of ``gripper_length`` along x5.
    """
    spans = []
    for i in range(N_FRAMES):
        if i + 1 < N_FRAMES:
            nxt = dh[i + 1]
            span = dh_transform(nxt)[:3, 3]
        else:
            span = np.array([gripper_length, 0.0, 0.0])
        spans.append(span)
    lengths = np.array([np.linalg.norm(s) for s in spans])
    masses = total_mass * lengths / lengths.sum()
    out = []
    for m, L, s in zip(masses, lengths, spans):
        u = s / L if L > 0 else np.zeros(3)
        I = m * L**2 / 12.0 * (np.eye(3) - np.outer(u, u))
        out.append(LinkParams(float(m), I, 0.5 * s))
    return tuple(out)
