"""Discrete translational model with a constant external force as augmented state."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ..rotations import euler_to_matrix, rot_z

NX = 9
NY = 10


@dataclass(frozen=True)
class AugmentedState:
    position: np.ndarray = field(default_factory=lambda: np.zeros(3))
    velocity: np.ndarray = field(default_factory=lambda: np.zeros(3))
    force: np.ndarray = field(default_factory=lambda: np.zeros(3))

    def to_vector(self) -> np.ndarray:
        return np.concatenate([self.position, self.velocity, self.force]).astype(float)

    @classmethod
    def from_vector(cls, x) -> "AugmentedState":
        x = np.asarray(x, dtype=float)
        return cls(x[0:3].copy(), x[3:6].copy(), x[6:9].copy())


@dataclass(frozen=True)
class EstimatorInput:
    U1: float = 0.0
    phi: float = 0.0
    theta: float = 0.0
    psi: float = 0.0

    def __post_init__(self):
        if not all(map(math.isfinite, (self.U1, self.phi, self.theta, self.psi))):
            raise ValueError("non-finite estimator input")
        if self.U1 < 0:
            raise ValueError("thrust must be non-negative")

    def to_vector(self) -> np.ndarray:
        return np.array([self.U1, self.phi, self.theta, self.psi])

    @classmethod
    def from_vector(cls, u) -> "EstimatorInput":
        return cls(*(float(v) for v in u))

    def thrust_world(self) -> np.ndarray:
        return self.U1 * euler_to_matrix(self.phi, self.theta, self.psi)[:, 2]


def fold_force_into_input(u: EstimatorInput, force_world) -> EstimatorInput:
    """Equivalent thrust/attitude whose thrust vector also carries ``force_world``.

    Used to remove a known (modelled) force from the estimator's view while
    keeping the four-channel input format.
    """
    T = u.thrust_world() + np.asarray(force_world, dtype=float)
    Tb = rot_z(-u.psi) @ T
    phi = math.atan2(-Tb[1], Tb[2])
    theta = math.atan2(Tb[0], math.hypot(Tb[1], Tb[2]))
    return EstimatorInput(float(np.linalg.norm(T)), phi, theta, u.psi)


def transition_matrix(dt: float, mass: float) -> np.ndarray:
    A = np.eye(NX)
    A[0:3, 3:6] = dt * np.eye(3)
    A[3:6, 6:9] = dt / mass * np.eye(3)
    return A


def input_term(u: EstimatorInput, dt: float, mass: float, gravity: float) -> np.ndarray:
    b = np.zeros(NX)
    acc = u.thrust_world() / mass
    acc[2] -= gravity
    b[3:6] = acc * dt
    return b


def process_model(x, u: EstimatorInput, dt: float, mass: float, gravity: float = 9.81) -> np.ndarray:
    """Forward-Euler step; the force state is held constant."""
    if dt <= 0:
        raise ValueError("dt must be positive")
    x = np.asarray(x, dtype=float)
    P, V, F = x[0:3], x[3:6], x[6:9]
    acc = (u.thrust_world() + F) / mass
    acc[2] -= gravity
    return np.concatenate([P + V * dt, V + acc * dt, F])


def process_jacobian(dt: float, mass: float) -> np.ndarray:
    return transition_matrix(dt, mass)


def measurement_model(x, u: EstimatorInput) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    return np.concatenate([x[0:6], u.to_vector()])


def measurement_jacobian() -> np.ndarray:
    H = np.zeros((NY, NX))
    H[0:6, 0:6] = np.eye(6)
    return H
