"""Reference generators: hover, straight line, circle, waypoint polyline and letter paths.

Paths are time-parametrised with trapezoidal speed profiles. A path given in
the surface frame is mapped to the world at a fixed height above the plane.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..control import ReferenceState
from ..vehicle import SurfaceModel
from ..vehicle.frames import from_surface_coords, surface_rotation


@dataclass(frozen=True)
class Trapezoid:
    length: float
    vmax: float
    amax: float

    def __post_init__(self):
        if self.length < 0 or self.vmax <= 0 or self.amax <= 0:
            raise ValueError("trapezoid needs length >= 0 and positive limits")

    @property
    def t_acc(self) -> float:
        return min(self.vmax / self.amax, math.sqrt(self.length / self.amax))

    @property
    def v_peak(self) -> float:
        return self.amax * self.t_acc

    @property
    def duration(self) -> float:
        if self.length == 0:
            return 0.0
        ta, vp = self.t_acc, self.v_peak
        return 2.0 * ta + (self.length - vp * ta) / vp

    def __call__(self, t: float):
        """Arc length, speed and tangential acceleration at ``t``."""
        L, a = self.length, self.amax
        ta, vp, T = self.t_acc, self.v_peak, self.duration
        if t <= 0 or L == 0:
            return 0.0, 0.0, 0.0
        if t >= T:
            return L, 0.0, 0.0
        if t < ta:
            return 0.5 * a * t * t, a * t, a
        if t <= T - ta:
            return 0.5 * vp * ta + vp * (t - ta), vp, 0.0
        r = T - t
        return L - 0.5 * a * r * r, a * r, -a


class Path:
    """Position, velocity and acceleration as functions of time in the path frame."""

    def sample(self, t: float):
        raise NotImplementedError

    @property
    def duration(self) -> float:
        raise NotImplementedError


class Hold(Path):
    def __init__(self, point):
        self.point = np.asarray(point, dtype=float)

    @property
    def duration(self):
        return 0.0

    def sample(self, t):
        return self.point.copy(), np.zeros(3), np.zeros(3)


class Waypoints(Path):
    """Straight segments, each with its own rest-to-rest trapezoidal profile.

    ``dwell`` holds the reference at every interior waypoint, which gives a
    wheeled vehicle time to turn on the spot at corners.
    """

    def __init__(self, points, vmax: float, amax: float, dwell: float = 0.0):
        pts = np.asarray(points, dtype=float)
        if pts.ndim != 2 or len(pts) < 2:
            raise ValueError("need at least two waypoints")
        if dwell < 0:
            raise ValueError("dwell must be non-negative")
        self.points = pts
        self.segments = []
        t0 = 0.0
        for i, (a, b) in enumerate(zip(pts[:-1], pts[1:])):
            if i > 0:
                t0 += dwell
            d = b - a
            L = float(np.linalg.norm(d))
            prof = Trapezoid(L, vmax, amax)
            u = d / L if L > 0 else np.zeros(3)
            self.segments.append((t0, a, u, prof))
            t0 += prof.duration
        self._duration = t0

    @property
    def duration(self):
        return self._duration

    def sample(self, t):
        if t >= self._duration:
            return self.points[-1].copy(), np.zeros(3), np.zeros(3)
        seg = self.segments[0]
        for cand in self.segments:
            if cand[0] > t:
                break
            seg = cand
        t0, a, u, prof = seg
        s, v, acc = prof(t - t0)
        return a + s * u, v * u, acc * u


class Circle(Path):
    """Circle in the path x-y plane, ramped in and out along the arc."""

    def __init__(self, center, radius: float, speed: float, accel: float, laps: float = 1.0,
                 start_angle: float = 0.0):
        if radius <= 0:
            raise ValueError("radius must be positive")
        self.center = np.asarray(center, dtype=float)
        self.radius = radius
        self.phase = start_angle
        self.profile = Trapezoid(2.0 * math.pi * radius * laps, speed, accel)

    @property
    def duration(self):
        return self.profile.duration

    def sample(self, t):
        s, v, a = self.profile(t)
        rho = self.radius
        th = self.phase + s / rho
        c, sn = math.cos(th), math.sin(th)
        p = self.center + rho * np.array([c, sn, 0.0])
        tang = np.array([-sn, c, 0.0])
        inward = -np.array([c, sn, 0.0])
        return p, v * tang, a * tang + (v * v / rho) * inward


# unit strokes; letters are 0.6 wide and 1 tall
LETTERS = {
    "I": [(0.3, 1.0), (0.3, 0.0)],
    "C": [(0.6, 1.0), (0.0, 1.0), (0.0, 0.0), (0.6, 0.0)],
    "R": [(0.0, 0.0), (0.0, 1.0), (0.6, 1.0), (0.6, 0.5), (0.0, 0.5), (0.6, 0.0)],
    "A": [(0.0, 0.0), (0.3, 1.0), (0.6, 0.0), (0.45, 0.5), (0.15, 0.5)],
    "L": [(0.0, 1.0), (0.0, 0.0), (0.6, 0.0)],
}


def letter_points(text: str, height: float, origin=(0.0, 0.0), spacing: float = 0.3) -> np.ndarray:
    """Polyline through the strokes of ``text``, joined letter to letter.

    Points are (right, up) on the page; ``spacing`` is the gap between
    letters in units of ``height``.
    """
    pts = []
    x0 = 0.0
    for ch in text.upper():
        if ch == " ":
            x0 += 0.6 + spacing
            continue
        if ch not in LETTERS:
            raise ValueError(f"no stroke data for {ch!r}")
        for x, y in LETTERS[ch]:
            pts.append((origin[0] + (x0 + x) * height, origin[1] + y * height, 0.0))
        x0 += 0.6 + spacing
    return np.array(pts)


class Reference:
    """Maps a path to world-frame ``ReferenceState`` samples."""

    def __init__(self, path: Path, start_time: float = 0.0, yaw: float = 0.0,
                 surface: SurfaceModel | None = None, height: float = 0.0):
        self.path = path
        self.start_time = start_time
        self.yaw = yaw
        self.surface = surface
        self.height = height
        self._R = surface_rotation(surface).T if surface is not None else np.eye(3)

    @property
    def end_time(self) -> float:
        return self.start_time + self.path.duration

    def __call__(self, t: float) -> ReferenceState:
        p, v, a = self.path.sample(max(0.0, t - self.start_time))
        if self.surface is not None:
            p = from_surface_coords(self.surface, [p[0], p[1], self.height + p[2]])
            v = self._R @ v
            a = self._R @ a
        return ReferenceState(p, v, a, self.yaw, t)


def build_reference(block: dict, surface: SurfaceModel | None, height: float) -> Reference:
    kind = block["type"]
    vmax, amax = float(block.get("speed", 0.6)), float(block.get("accel", 0.2))
    dwell = float(block.get("dwell", 0.0))
    on_surface = block.get("frame", "world") == "surface"
    if kind == "hover":
        path = Hold(_pt(block.get("position", [0.0, 0.0, 0.0])))
    elif kind == "line":
        path = Waypoints([_pt(block["start"]), _pt(block["end"])], vmax, amax)
    elif kind == "waypoints":
        path = Waypoints([_pt(p) for p in block["points"]], vmax, amax, dwell)
    elif kind == "circle":
        path = Circle(_pt(block.get("center", [0.0, 0.0, 0.0])), float(block["radius"]), vmax, amax,
                      float(block.get("laps", 1.0)), math.radians(block.get("start_angle_deg", 0.0)))
    elif kind == "letters":
        pts = letter_points(block.get("text", "ICRAL"), float(block.get("height", 0.3)),
                            (0.0, 0.0), float(block.get("spacing", 0.3)))
        if on_surface:
            # page "up" is uphill (surface x); reading direction is -y, which is
            # left to right for someone facing the surface
            pts = np.column_stack([pts[:, 1], -pts[:, 0], pts[:, 2]])
        pts[:, :2] += np.asarray(block.get("origin", (0.0, 0.0)), dtype=float)
        path = Waypoints(pts, vmax, amax, dwell)
    else:
        raise ValueError(f"unknown reference type {kind!r}")
    return Reference(path, float(block.get("start_time", 0.0)), math.radians(block.get("yaw_deg", 0.0)),
                     surface if on_surface else None, height if on_surface else 0.0)


def _pt(p) -> np.ndarray:
    p = np.asarray(p, dtype=float)
    if p.shape == (2,):
        p = np.append(p, 0.0)
    if p.shape != (3,):
        raise ValueError(f"point {p!r} is not 2- or 3-dimensional")
    return p
