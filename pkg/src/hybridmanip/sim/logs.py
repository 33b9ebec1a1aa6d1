"""Trajectory and estimator logs: CSV written incrementally plus a JSON sidecar."""

from __future__ import annotations

import csv
import json
import math
from pathlib import Path

import numpy as np

SCHEMA_VERSION = 1

LOG_COLUMNS = [
    "t", "mode", "contact",
    "x", "y", "z", "vx", "vy", "vz", "phi", "theta", "psi", "wx", "wy", "wz",
    "ref_x", "ref_y", "ref_z",
    "U1", "U2", "U3", "U4",
    "F_n", "F_left", "F_right", "slip",
    "arm_fx", "arm_fy", "arm_fz", "arm_tx", "arm_ty", "arm_tz",
    "est_fx", "est_fy", "est_fz", "gamma_hat", "est_cost", "est_iter",
    "error",
]

ESTIMATOR_COLUMNS = ["t"] + [f"y{i}" for i in range(1, 11)] + [f"u{i}" for i in range(1, 5)]


def _fmt(v) -> str:
    if isinstance(v, str):
        return v
    if isinstance(v, (bool, np.bool_)):
        return str(int(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    v = float(v)
    return "nan" if math.isnan(v) else repr(v)


class CsvLog:
    """Append-only CSV; rows are flushed every ``flush_every`` records."""

    def __init__(self, path, columns, flush_every: int = 250):
        self.path = Path(path)
        self.columns = list(columns)
        self._fh = open(self.path, "w", newline="")
        self._w = csv.writer(self._fh, lineterminator="\n")
        self._w.writerow(self.columns)
        self._n = 0
        self.flush_every = flush_every

    def append(self, row):
        if len(row) != len(self.columns):
            raise ValueError(f"row has {len(row)} fields, expected {len(self.columns)}")
        self._w.writerow([_fmt(v) for v in row])
        self._n += 1
        if self._n % self.flush_every == 0:
            self._fh.flush()

    def __len__(self):
        return self._n

    def close(self):
        if not self._fh.closed:
            self._fh.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


def write_sidecar(csv_path, scenario_json: str, digest: str, extra: dict | None = None) -> Path:
    path = Path(csv_path).with_suffix(".json")
    doc = {"schema_version": SCHEMA_VERSION, "scenario_sha256": digest,
           "scenario": json.loads(scenario_json), "columns": LOG_COLUMNS}
    doc.update(extra or {})
    path.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")
    return path


def read_sidecar(csv_path) -> dict | None:
    path = Path(csv_path).with_suffix(".json")
    if not path.exists():
        return None
    return json.loads(path.read_text())


def read_log(path) -> dict:
    """Load a trajectory CSV into column arrays (``mode`` stays a string array)."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            raise ValueError(f"{path}: empty file")
        rows = list(reader)
    cols = {}
    for i, name in enumerate(header):
        vals = [r[i] for r in rows]
        if name == "mode":
            cols[name] = np.array(vals, dtype=object)
        else:
            cols[name] = np.array([float(v) for v in vals], dtype=float)
    return cols
