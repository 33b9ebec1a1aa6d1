from __future__ import annotations

import numpy as np

from ..errors import NumericalFailure


def rk4_step(f, x, dt: float) -> np.ndarray:
    """One classical Runge-Kutta step of ``x' = f(x)``.

    ``f`` is re-evaluated at every stage, so contact quantities computed
    inside it (normal force, slip) follow the stage state.
    """
    if dt <= 0:
        raise ValueError("dt must be positive")
    x = np.asarray(x, dtype=float)
    k1 = _finite(f(x))
    k2 = _finite(f(x + 0.5 * dt * k1))
    k3 = _finite(f(x + 0.5 * dt * k2))
    k4 = _finite(f(x + dt * k3))
    return x + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def _finite(v):
    v = np.asarray(v, dtype=float)
    if not np.all(np.isfinite(v)):
        raise NumericalFailure("non-finite state derivative")
    return v


integrate_step = rk4_step
