"""Offline MHE over a logged (t, y1..y10, u1..u4) table."""

from __future__ import annotations

import csv
import math

import numpy as np

from .ekf import NoiseModel
from .mhe import MheConfig, MovingHorizonEstimator
from .models import EstimatorInput

INPUT_COLUMNS = ["t"] + [f"y{i}" for i in range(1, 11)] + [f"u{i}" for i in range(1, 5)]
OUTPUT_COLUMNS = ["t"] + [f"x{i}" for i in range(1, 10)] + ["gamma_hat", "cost", "iterations"]


def read_estimator_log(path):
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        missing = [c for c in INPUT_COLUMNS if c not in (reader.fieldnames or [])]
        if missing:
            raise ValueError(f"{path}: missing columns {missing}")
        rows = [[float(r[c]) for c in INPUT_COLUMNS] for r in reader]
    return np.array(rows, dtype=float).reshape(-1, len(INPUT_COLUMNS))


def replay(table: np.ndarray, mass: float, gravity: float = 9.81, horizon: int = 20,
           noise: NoiseModel | None = None, cfg: MheConfig | None = None) -> np.ndarray:
    if len(table) < 2:
        raise ValueError("need at least two rows")
    dt = float(np.median(np.diff(table[:, 0])))
    cfg = cfg or MheConfig()
    cfg = MheConfig(**{**cfg.__dict__, "horizon": horizon, "rate_hz": 1.0 / dt})
    est = MovingHorizonEstimator(mass, gravity, noise, cfg)
    out = []
    for row in table:
        o = est.step(row[0], row[1:11], EstimatorInput.from_vector(row[11:15]))
        out.append([o.t, *o.state, o.gamma_hat, o.cost, o.iterations])
    return np.array(out)


def write_estimates(path, rows: np.ndarray):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(OUTPUT_COLUMNS)
        for r in rows:
            w.writerow([_fmt(v) for v in r[:-1]] + [int(r[-1])])


def _fmt(v):
    return "nan" if math.isnan(v) else repr(float(v))
