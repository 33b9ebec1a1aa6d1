from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np


@dataclass(frozen=True)
class Metrics:
    average_error: float  # m
    max_error: float  # m
    rms_xyz: tuple  # m
    gamma_error: float  # rad, nan when no estimate is available
    thrust_integral: float  # N s
    samples: int

    def as_dict(self) -> dict:
        d = asdict(self)
        d["rms_xyz"] = list(self.rms_xyz)
        return d


def compute_tracking_metrics(t, position, reference, settle_time: float = 0.0, U1=None,
                             gamma_hat=None, gamma_true: float | None = None,
                             gamma_window: float = 1.0) -> Metrics:
    """Tracking statistics over the samples with ``t >= settle_time``.

    ``gamma_error`` compares the mean estimate over the final
    ``gamma_window`` seconds with ``gamma_true``.
    """
    t = np.asarray(t, dtype=float)
    if t.size == 0:
        raise ValueError("empty log")
    P = np.asarray(position, dtype=float).reshape(-1, 3)
    Ref = np.asarray(reference, dtype=float).reshape(-1, 3)
    sel = t >= settle_time
    if not np.any(sel):
        raise ValueError(f"no samples after settle time {settle_time}")
    e = P[sel] - Ref[sel]
    d = np.linalg.norm(e, axis=1)
    energy = 0.0
    if U1 is not None and t.size > 1:
        energy = float(np.trapezoid(np.asarray(U1, dtype=float), t))
    g_err = math.nan
    if gamma_hat is not None and gamma_true is not None:
        g = np.asarray(gamma_hat, dtype=float)
        w = (t >= t[-1] - gamma_window) & np.isfinite(g)
        if np.any(w):
            g_err = float(abs(np.mean(g[w]) - gamma_true))
    return Metrics(float(d.mean()), float(d.max()), tuple(float(v) for v in np.sqrt((e**2).mean(axis=0))),
                   g_err, energy, int(sel.sum()))


def empty_metrics() -> Metrics:
    return Metrics(0.0, 0.0, (0.0, 0.0, 0.0), math.nan, 0.0, 0)
