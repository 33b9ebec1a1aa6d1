"""EKF recursion used to propagate the arrival-cost prior."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import NumericalFailure
from .models import NX, NY, EstimatorInput, measurement_jacobian, measurement_model, process_jacobian, process_model


def _spd(M, name):
    M = np.asarray(M, dtype=float)
    if M.ndim == 1:
        M = np.diag(M)
    if not np.allclose(M, M.T, atol=1e-12 * max(1.0, np.abs(M).max())):
        raise ValueError(f"{name} must be symmetric")
    try:
        np.linalg.cholesky(M)
    except np.linalg.LinAlgError:
        raise ValueError(f"{name} must be positive definite") from None
    return M


def _default_Q():
    return np.diag([1e-6] * 3 + [1e-4] * 3 + [1e-2] * 3)


def _default_R():
    return np.diag([1e-4] * 3 + [1e-3] * 3 + [1e-3] * 4)


@dataclass(frozen=True)
class NoiseModel:
    Q: np.ndarray = field(default_factory=_default_Q)
    R: np.ndarray = field(default_factory=_default_R)

    def __post_init__(self):
        Q = _spd(self.Q, "Q")
        R = _spd(self.R, "R")
        if Q.shape != (NX, NX) or R.shape != (NY, NY):
            raise ValueError("Q must be 9x9 and R 10x10")
        object.__setattr__(self, "Q", Q)
        object.__setattr__(self, "R", R)

    @classmethod
    def from_dict(cls, d: dict | None) -> "NoiseModel":
        d = d or {}
        q = d.get("Q")
        r = d.get("R")
        if isinstance(q, dict):
            q = np.repeat([q.get("P", 1e-6), q.get("V", 1e-4), q.get("F", 1e-2)], 3)
        if isinstance(r, dict):
            r = np.concatenate([np.repeat([r.get("P", 1e-4), r.get("V", 1e-3)], 3),
                                np.full(4, r.get("input", 1e-3))])
        return cls(_default_Q() if q is None else q, _default_R() if r is None else r)


def ekf_update(x, P, y, u: EstimatorInput, R):
    H = measurement_jacobian()
    S = H @ P @ H.T + R
    try:
        K = np.linalg.solve(S.T, (P @ H.T).T).T
    except np.linalg.LinAlgError:
        raise NumericalFailure("innovation covariance is singular") from None
    if not np.all(np.isfinite(K)):
        raise NumericalFailure("innovation covariance is singular")
    x = x + K @ (np.asarray(y, dtype=float) - measurement_model(x, u))
    IKH = np.eye(NX) - K @ H
    # Joseph form keeps P positive definite
    P = IKH @ P @ IKH.T + K @ R @ K.T
    return x, 0.5 * (P + P.T)


def ekf_predict(x, P, u: EstimatorInput, Q, dt, mass, gravity):
    A = process_jacobian(dt, mass)
    x = process_model(x, u, dt, mass, gravity)
    P = A @ P @ A.T + Q
    return x, 0.5 * (P + P.T)


def arrival_cost_update(prior, y, u: EstimatorInput, noise: NoiseModel, dt: float,
                        mass: float, gravity: float = 9.81):
    """Move the prior on ``x_k`` to a prior on ``x_{k+1}`` using sample ``k``.

    Update with the measurement, then predict through the process model.
    """
    x, P = prior
    x = np.asarray(x, dtype=float)
    P = _spd(P, "P")
    x, P = ekf_update(x, P, y, u, noise.R)
    return ekf_predict(x, P, u, noise.Q, dt, mass, gravity)
