from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


def _gain(v, dim):
    a = np.asarray(v, dtype=float)
    return np.full(dim, float(a)) if a.ndim == 0 else a.reshape(dim)


@dataclass(frozen=True)
class PidGains:
    kp: np.ndarray = field(default_factory=lambda: np.zeros(3))
    ki: np.ndarray = field(default_factory=lambda: np.zeros(3))
    kd: np.ndarray = field(default_factory=lambda: np.zeros(3))
    integral_limit: float = 1.0
    dim: int = 3

    def __post_init__(self):
        for name in ("kp", "ki", "kd"):
            g = _gain(getattr(self, name), self.dim)
            if np.any(g < 0):
                raise ValueError(f"{name} must be non-negative")
            object.__setattr__(self, name, g)
        if self.integral_limit <= 0:
            raise ValueError("integral_limit must be positive")

    @classmethod
    def from_dict(cls, d: dict, dim: int = 3) -> "PidGains":
        return cls(d.get("kp", 0.0), d.get("ki", 0.0), d.get("kd", 0.0),
                   d.get("integral_limit", 1.0), dim)


class Pid:
    """Vector PID with a clamped integrator.

    The derivative uses ``error_rate`` when supplied, otherwise a backward
    difference of the error (zero on the first call).
    """

    def __init__(self, gains: PidGains):
        self.gains = gains
        self.reset()

    def reset(self):
        self.integral = np.zeros(self.gains.dim)
        self._prev = None

    def update(self, error, dt: float, error_rate=None) -> np.ndarray:
        if dt <= 0:
            raise ValueError("dt must be positive")
        g = self.gains
        e = np.asarray(error, dtype=float).reshape(g.dim)
        if error_rate is None:
            de = np.zeros(g.dim) if self._prev is None else (e - self._prev) / dt
        else:
            de = np.asarray(error_rate, dtype=float).reshape(g.dim)
        self._prev = e
        if np.any(g.ki):
            self.integral = np.clip(self.integral + e * dt, -g.integral_limit, g.integral_limit)
        return g.kp * e + g.ki * self.integral + g.kd * de
