"""Scenario files: YAML documents deep-merged over ``DEFAULTS``."""

from __future__ import annotations

import copy
import hashlib
import json
import math
from dataclasses import fields
from pathlib import Path

import numpy as np
import yaml

from ..control import ControlConfig
from ..errors import ScenarioError
from ..vehicle import SurfaceModel, VehicleParams

DEFAULTS = {
    "name": "unnamed",
    "duration": 10.0,
    "seed": 0,
    "rates": {"integrator": 1000, "control": 250, "estimator": 100, "log": 250},
    "vehicle": {},
    "surface": {"present": False, "gamma_deg": 0.0, "azimuth_deg": 0.0, "origin": [0.0, 0.0, 0.0],
                "mu_r": 0.02, "mu_smax": 0.7, "friction_speed_eps": 1e-3, "stiction_force": 0.0},
    "arm": {"enabled": False, "mass": 0.18, "base_offset": [0.0, 0.0, 0.0],
            "offset_deg": [0.0, 0.0, 0.0, 0.0, 0.0], "amplitude_deg": [0.0] * 5,
            "frequency_hz": [0.0] * 5, "phase_deg": [0.0] * 5},
    "control": {},
    "estimator": {"enabled": True, "horizon": 20, "noise_floor": 0.5, "Q": None, "R": None,
                  "prior_sigma": [0.05, 0.1, 5.0]},
    "noise": {"position": 0.001, "attitude_deg": 0.2, "velocity": 0.0, "rate": 0.0},
    "mode": {"policy": "fixed", "initial": "aerial", "schedule": [], "debounce": 0.1},
    "reference": {"type": "hover", "frame": "world", "position": [0.0, 0.0, 1.0], "yaw_deg": 0.0,
                  "speed": 0.6, "accel": 0.2},
    "initial": {},
    "metrics": {"settle_time": 2.0, "gamma_window": 1.0},
}

POLICIES = ("fixed", "scripted", "auto")
MODES = ("aerial", "terrestrial")
REFERENCE_TYPES = ("hover", "line", "circle", "waypoints", "letters")


def deep_merge(base: dict, over: dict) -> dict:
    out = copy.deepcopy(base)
    for k, v in (over or {}).items():
        if isinstance(v, dict) and isinstance(out.get(k), dict):
            out[k] = deep_merge(out[k], v)
        else:
            out[k] = copy.deepcopy(v)
    return out


def parse_override(text: str):
    """``a.b.c=value`` to ``("a.b.c", value)``; the value is parsed as YAML."""
    if "=" not in text:
        raise ScenarioError(f"override {text!r} is not key=value")
    key, raw = text.split("=", 1)
    key = key.strip()
    if not key:
        raise ScenarioError(f"override {text!r} has an empty key")
    try:
        return key, yaml.safe_load(raw)
    except yaml.YAMLError as e:
        raise ScenarioError(f"override {text!r}: {e}") from None


def apply_override(doc: dict, key: str, value) -> dict:
    doc = copy.deepcopy(doc)
    node = doc
    parts = key.split(".")
    for p in parts[:-1]:
        nxt = node.get(p)
        if nxt is None:
            nxt = node[p] = {}
        if not isinstance(nxt, dict):
            raise ScenarioError(f"override {key!r}: {p!r} is not a block")
        node = nxt
    node[parts[-1]] = value
    return doc


def _jsonable(o):
    if isinstance(o, dict):
        return {str(k): _jsonable(v) for k, v in o.items()}
    if isinstance(o, (list, tuple)):
        return [_jsonable(v) for v in o]
    if isinstance(o, np.ndarray):
        return o.tolist()
    return o


class Scenario:
    """Validated scenario document with typed views of its blocks."""

    def __init__(self, doc: dict | None = None, source: str | None = None):
        self.doc = deep_merge(DEFAULTS, doc or {})
        self.source = source
        self._validate()

    @classmethod
    def load(cls, path, overrides=(), seed: int | None = None) -> "Scenario":
        path = Path(path)
        try:
            raw = yaml.safe_load(path.read_text()) or {}
        except OSError as e:
            raise ScenarioError(f"cannot read {path}: {e.strerror}") from None
        except yaml.YAMLError as e:
            raise ScenarioError(f"{path}: {e}") from None
        if not isinstance(raw, dict):
            raise ScenarioError(f"{path}: top level must be a mapping")
        for item in overrides:
            raw = apply_override(raw, *parse_override(item))
        if seed is not None:
            raw["seed"] = int(seed)
        return cls(raw, str(path))

    def with_overrides(self, **flat) -> "Scenario":
        doc = self.doc
        for k, v in flat.items():
            doc = apply_override(doc, k.replace("__", "."), v)
        return Scenario(doc, self.source)

    def _validate(self):
        d = self.doc
        try:
            dur = float(d["duration"])
        except (TypeError, ValueError):
            raise ScenarioError("duration must be a number") from None
        if not math.isfinite(dur) or dur < 0:
            raise ScenarioError("duration must be >= 0")
        r = d["rates"]
        base = r["integrator"]
        for k in ("control", "estimator", "log"):
            if not isinstance(r[k], int) or r[k] <= 0 or base % r[k]:
                raise ScenarioError(f"rate {k}={r[k]} must divide the integrator rate {base}")
        m = d["mode"]
        if m["policy"] not in POLICIES:
            raise ScenarioError(f"mode.policy must be one of {POLICIES}")
        if m["initial"] not in MODES:
            raise ScenarioError(f"mode.initial must be one of {MODES}")
        for item in m["schedule"] or []:
            if len(item) != 2 or item[1] not in MODES:
                raise ScenarioError(f"bad schedule entry {item!r}")
        if d["reference"]["type"] not in REFERENCE_TYPES:
            raise ScenarioError(f"reference.type must be one of {REFERENCE_TYPES}")
        if d["reference"]["frame"] not in ("world", "surface"):
            raise ScenarioError("reference.frame must be world or surface")
        if m["initial"] == "terrestrial" or m["policy"] != "fixed":
            if not d["surface"]["present"]:
                raise ScenarioError("terrestrial operation needs surface.present: true")
        known = {f.name for f in fields(ControlConfig)}
        bad = set(d["control"]) - known
        if bad:
            raise ScenarioError(f"unknown control keys {sorted(bad)}")
        try:
            self.vehicle_params()
            self.surface_model()
        except (TypeError, ValueError) as e:
            raise ScenarioError(str(e)) from None

    # typed views

    @property
    def duration(self) -> float:
        return float(self.doc["duration"])

    @property
    def seed(self) -> int:
        return int(self.doc["seed"])

    @property
    def rates(self) -> dict:
        return self.doc["rates"]

    def vehicle_params(self) -> VehicleParams:
        v = dict(self.doc["vehicle"])
        for k in ("inertia", "com_offset", "max_torque"):
            if k in v:
                v[k] = np.asarray(v[k], dtype=float)
        return VehicleParams(**v)

    def surface_model(self) -> SurfaceModel:
        s = self.doc["surface"]
        return SurfaceModel(
            gamma=math.radians(s["gamma_deg"]), mu_r=s["mu_r"], mu_smax=s["mu_smax"],
            in_contact=bool(s["present"]), azimuth=math.radians(s["azimuth_deg"]),
            origin=np.asarray(s["origin"], dtype=float),
            friction_speed_eps=s["friction_speed_eps"], stiction_force=s["stiction_force"])

    def control_config(self) -> ControlConfig:
        c = dict(self.doc["control"])
        for k in ("los_gain_coeffs", "thrust_schedule"):
            if k in c:
                c[k] = tuple(c[k])
        return ControlConfig(**c)

    def to_json(self) -> str:
        return json.dumps(_jsonable(self.doc), sort_keys=True, separators=(",", ":"))

    def digest(self) -> str:
        return hashlib.sha256(self.to_json().encode()).hexdigest()
