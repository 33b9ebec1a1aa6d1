from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np


def _vec(v, n=3):
    return np.asarray(v, dtype=float).reshape(n)


@dataclass(frozen=True)
class RigidBodyState:
    position: np.ndarray = field(default_factory=lambda: np.zeros(3))
    velocity: np.ndarray = field(default_factory=lambda: np.zeros(3))
    attitude: np.ndarray = field(default_factory=lambda: np.zeros(3))  # roll, pitch, yaw
    omega: np.ndarray = field(default_factory=lambda: np.zeros(3))  # body rates

    def __post_init__(self):
        for name in ("position", "velocity", "attitude", "omega"):
            object.__setattr__(self, name, _vec(getattr(self, name)))

    def to_vector(self) -> np.ndarray:
        return np.concatenate([self.position, self.velocity, self.attitude, self.omega])

    @classmethod
    def from_vector(cls, x) -> "RigidBodyState":
        x = np.asarray(x, dtype=float)
        return cls(x[0:3], x[3:6], x[6:9], x[9:12])


@dataclass(frozen=True)
class VehicleParams:
    """Chassis parameters; ``mass`` excludes the arm."""

    mass: float = 2.22
    inertia: np.ndarray = field(default_factory=lambda: np.diag([0.025, 0.025, 0.04]))
    half_track: float = 0.17
    wheel_radius: float = 0.17
    wheel_inertia: float = 2e-3
    com_offset: np.ndarray = field(default_factory=lambda: np.zeros(3))
    gravity: float = 9.81
    max_thrust: float = 60.0
    max_torque: np.ndarray = field(default_factory=lambda: np.array([3.0, 3.0, 1.5]))

    def __post_init__(self):
        I = np.asarray(self.inertia, dtype=float)
        if I.shape == (3,):
            I = np.diag(I)
        if self.mass <= 0 or self.wheel_radius <= 0:
            raise ValueError("mass and wheel radius must be positive")
        if np.linalg.eigvalsh(I).min() <= 0:
            raise ValueError("inertia must be positive definite")
        object.__setattr__(self, "inertia", I)
        object.__setattr__(self, "com_offset", _vec(self.com_offset))
        object.__setattr__(self, "max_torque", _vec(self.max_torque))

    @property
    def weight(self) -> float:
        return self.mass * self.gravity

    def with_(self, **kw) -> "VehicleParams":
        return replace(self, **kw)


@dataclass(frozen=True)
class SurfaceModel:
    """Planar surface tilted by ``gamma`` about the world y-axis.

    ``azimuth`` yaws the whole surface about world z and ``origin`` is any
    point on the plane. At ``gamma = pi/2`` and zero azimuth the wall faces -x.
    """

    gamma: float = 0.0
    mu_r: float = 0.02
    mu_smax: float = 0.7
    in_contact: bool = True
    azimuth: float = 0.0
    origin: np.ndarray = field(default_factory=lambda: np.zeros(3))
    friction_speed_eps: float = 1e-3  # smoothing width of the friction sign, m/s or rad/s
    stiction_force: float = 0.0  # 0 disables stiction

    def __post_init__(self):
        if not (0.0 <= self.gamma <= math.pi / 2 + 1e-12):
            raise ValueError("gamma must lie in [0, pi/2]")
        if self.mu_r < 0 or self.mu_smax < 0:
            raise ValueError("friction coefficients must be non-negative")
        object.__setattr__(self, "origin", _vec(self.origin))

    def with_(self, **kw) -> "SurfaceModel":
        return replace(self, **kw)


@dataclass(frozen=True)
class RotorCommand:
    U1: float = 0.0
    U2: float = 0.0
    U3: float = 0.0
    U4: float = 0.0

    @property
    def torque(self) -> np.ndarray:
        return np.array([self.U2, self.U3, self.U4])

    def clipped(self, params: VehicleParams) -> "RotorCommand":
        lim = params.max_torque
        return RotorCommand(
            float(np.clip(self.U1, 0.0, params.max_thrust)),
            float(np.clip(self.U2, -lim[0], lim[0])),
            float(np.clip(self.U3, -lim[1], lim[1])),
            float(np.clip(self.U4, -lim[2], lim[2])),
        )


@dataclass(frozen=True)
class TerrestrialState:
    """Configuration of the vehicle rolling on a surface.

    ``surface_xy`` are plane coordinates of the body centre, ``alpha`` the
    heading about the surface normal, ``beta`` the body tilt about the axle
    measured from the rolling x-axis (``delta + theta``).
    """

    surface_xy: np.ndarray = field(default_factory=lambda: np.zeros(2))
    alpha: float = 0.0
    alpha_rate: float = 0.0
    beta: float = 0.0
    beta_rate: float = 0.0
    v_rx: float = 0.0
    F_n: float = 0.0
    F_left: float = 0.0
    F_right: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "surface_xy", _vec(self.surface_xy, 2))

    def to_vector(self) -> np.ndarray:
        return np.array([*self.surface_xy, self.alpha, self.alpha_rate,
                         self.beta, self.beta_rate, self.v_rx])

    @classmethod
    def from_vector(cls, x, **forces) -> "TerrestrialState":
        x = np.asarray(x, dtype=float)
        return cls(x[0:2], x[2], x[3], x[4], x[5], x[6], **forces)


@dataclass(frozen=True)
class StateDerivative:
    """Time derivative of a state vector (aerial: 12, terrestrial: 7)."""

    value: np.ndarray
    slip_flag: bool = False
    wheel_lift: bool = False
    accel_world: np.ndarray | None = None
    omega_dot_body: np.ndarray | None = None
