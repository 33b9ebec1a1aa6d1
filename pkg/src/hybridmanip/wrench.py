from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import FrameMismatchError

FRAMES = ("world", "body", "rolling", "S0", "S1", "S2", "S3", "S4", "S5")


@dataclass(frozen=True)
class Wrench:
    """Force/torque pair tagged with the frame its components are expressed in."""

    force: np.ndarray = field(default_factory=lambda: np.zeros(3))
    torque: np.ndarray = field(default_factory=lambda: np.zeros(3))
    frame: str = "world"

    def __post_init__(self):
        if self.frame not in FRAMES:
            raise ValueError(f"unknown frame {self.frame!r}")
        object.__setattr__(self, "force", np.asarray(self.force, dtype=float).reshape(3))
        object.__setattr__(self, "torque", np.asarray(self.torque, dtype=float).reshape(3))

    @classmethod
    def zero(cls, frame: str) -> "Wrench":
        return cls(np.zeros(3), np.zeros(3), frame)

    def expect(self, frame: str) -> "Wrench":
        if self.frame != frame:
            raise FrameMismatchError(f"expected wrench in {frame}, got {self.frame}")
        return self

    def __add__(self, other: "Wrench") -> "Wrench":
        other.expect(self.frame)
        return Wrench(self.force + other.force, self.torque + other.torque, self.frame)

    def __neg__(self) -> "Wrench":
        return Wrench(-self.force, -self.torque, self.frame)

    def scaled(self, k: float) -> "Wrench":
        return Wrench(k * self.force, k * self.torque, self.frame)

    def rotated(self, R: np.ndarray, frame: str) -> "Wrench":
        """Re-express in ``frame`` given ``R`` mapping current coordinates into it."""
        return Wrench(R @ self.force, R @ self.torque, frame)
