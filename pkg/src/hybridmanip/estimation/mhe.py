"""Moving-horizon estimation of position, velocity and external force."""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field

import numpy as np

from ..errors import NonConvergenceError, NumericalFailure
from .ekf import NoiseModel, arrival_cost_update
from .models import (
    NX,
    NY,
    EstimatorInput,
    measurement_jacobian,
    measurement_model,
    process_jacobian,
    process_model,
)


@dataclass
class Sample:
    t: float
    y: np.ndarray
    u: EstimatorInput


class EstimationWindow:
    """Ring buffer of the last ``N + 1`` samples with the prior on the oldest state."""

    def __init__(self, horizon: int, dt: float, prior_x=None, prior_P=None):
        if horizon < 1:
            raise ValueError("horizon must be >= 1")
        if dt <= 0:
            raise ValueError("dt must be positive")
        self.horizon = int(horizon)
        self.dt = float(dt)
        self.samples: deque[Sample] = deque(maxlen=self.horizon + 1)
        self.prior_x = np.zeros(NX) if prior_x is None else np.asarray(prior_x, dtype=float)
        self.prior_P = np.eye(NX) if prior_P is None else np.asarray(prior_P, dtype=float)

    def __len__(self):
        return len(self.samples)

    @property
    def full(self) -> bool:
        return len(self.samples) == self.horizon + 1

    def push(self, t: float, y, u: EstimatorInput) -> Sample | None:
        """Append a sample; return the evicted oldest sample, if any."""
        y = np.asarray(y, dtype=float).reshape(NY)
        if self.samples:
            gap = t - self.samples[-1].t
            if abs(gap - self.dt) > 1e-6 * max(1.0, self.dt) + 1e-9:
                raise ValueError(f"non-uniform sample spacing {gap:.6g} s (expected {self.dt:.6g})")
        old = self.samples[0] if self.full else None
        self.samples.append(Sample(float(t), y, u))
        return old


@dataclass
class MheDiagnostics:
    iterations: int
    cost: float
    grad_norm: float
    cost_history: list = field(default_factory=list)
    reason: str = ""


@dataclass
class MheResult:
    states: np.ndarray  # (N+1, 9), oldest first
    diagnostics: MheDiagnostics

    @property
    def head(self) -> np.ndarray:
        return self.states[-1]

    @property
    def force(self) -> np.ndarray:
        return self.states[-1, 6:9]


def _whitener(C):
    # W^T W = C^-1
    return np.linalg.cholesky(np.linalg.inv(C)).T


class _Problem:
    """Stacked, whitened residual ``r(z)`` of the window cost and its constant Jacobian."""

    def __init__(self, window: EstimationWindow, noise: NoiseModel, mass: float, gravity: float,
                 arrival: bool):
        self.w = window
        self.mass, self.gravity = mass, gravity
        self.n = len(window.samples)
        self.WR = _whitener(noise.R)
        self.WQ = _whitener(noise.Q)
        self.WP = _whitener(window.prior_P) if arrival else None
        self.J = self._jacobian()

    def unpack(self, z):
        return z.reshape(self.n, NX)

    def residual(self, z) -> np.ndarray:
        X = self.unpack(z)
        dt, m, g = self.w.dt, self.mass, self.gravity
        out = []
        for k, s in enumerate(self.w.samples):
            out.append(self.WR @ (s.y - measurement_model(X[k], s.u)))
        for k in range(self.n - 1):
            s = self.w.samples[k]
            out.append(self.WQ @ (X[k + 1] - process_model(X[k], s.u, dt, m, g)))
        if self.WP is not None:
            out.append(self.WP @ (X[0] - self.w.prior_x))
        return np.concatenate(out)

    def _jacobian(self) -> np.ndarray:
        n = self.n
        rows = n * NY + (n - 1) * NX + (NX if self.WP is not None else 0)
        J = np.zeros((rows, n * NX))
        mH = -self.WR @ measurement_jacobian()
        for k in range(n):
            J[k * NY:(k + 1) * NY, k * NX:(k + 1) * NX] = mH
        mA = -self.WQ @ process_jacobian(self.w.dt, self.mass)
        r0 = n * NY
        for k in range(n - 1):
            r = r0 + k * NX
            J[r:r + NX, k * NX:(k + 1) * NX] = mA
            J[r:r + NX, (k + 1) * NX:(k + 2) * NX] = self.WQ
        if self.WP is not None:
            J[-NX:, 0:NX] = self.WP
        return J

    def cost(self, z) -> float:
        r = self.residual(z)
        return float(r @ r)


def stacked_problem(window: EstimationWindow, noise: NoiseModel, mass: float,
                    gravity: float = 9.81, arrival: bool = True):
    """Residual function and Jacobian of the window cost, for inspection and testing."""
    p = _Problem(window, noise, mass, gravity, arrival)
    return p.residual, p.J


def initial_guess(window: EstimationWindow) -> np.ndarray:
    X = np.zeros((len(window.samples), NX))
    for k, s in enumerate(window.samples):
        X[k, 0:6] = s.y[0:6]
        X[k, 6:9] = window.prior_x[6:9]
    return X


def mhe_solve(window: EstimationWindow, noise: NoiseModel, mass: float, gravity: float = 9.81,
              max_iter: int = 25, grad_tol: float = 1e-9, warm_start=None, bounds=None,
              arrival: bool = True) -> MheResult:
    """Minimise the windowed weighted least-squares cost by damped Gauss-Newton.

    The cost is the sum of measurement residuals weighted by ``R^-1``,
    process residuals weighted by ``Q^-1`` and, with ``arrival``, the
    deviation of the oldest state from the prior weighted by ``P^-1``.
    Each Gauss-Newton step is halved until the cost does not increase.
    ``bounds`` is an optional ``(lo, hi)`` pair of 9-vectors applied to
    every state by projection.
    """
    if not window.full:
        raise ValueError(f"window holds {len(window)} samples, needs {window.horizon + 1}")
    try:
        prob = _Problem(window, noise, mass, gravity, arrival)
    except np.linalg.LinAlgError:
        raise NumericalFailure("covariance not positive definite") from None
    J = prob.J
    JtJ = J.T @ J
    try:
        np.linalg.cholesky(JtJ)
    except np.linalg.LinAlgError:
        raise NumericalFailure("singular normal equations") from None

    X0 = initial_guess(window) if warm_start is None else np.array(warm_start, dtype=float)
    if X0.shape != (prob.n, NX):
        raise ValueError("warm start has the wrong shape")
    lo = hi = None
    if bounds is not None:
        lo, hi = (np.tile(np.asarray(b, dtype=float), prob.n) for b in bounds)
    z = X0.ravel()
    if lo is not None:
        z = np.clip(z, lo, hi)

    r = prob.residual(z)
    cost = float(r @ r)
    history = [cost]
    reason = ""
    g = 2.0 * J.T @ r
    it = 0
    while True:
        gnorm = float(np.linalg.norm(g))
        if gnorm <= grad_tol:
            reason = "gradient"
            break
        if it >= max_iter:
            diag = MheDiagnostics(it, cost, gnorm, history, "max-iterations")
            raise NonConvergenceError(f"no convergence after {it} iterations (|g|={gnorm:.3e})",
                                      last_iterate=prob.unpack(z).copy(), diagnostics=diag)
        dz = np.linalg.solve(JtJ, -J.T @ r)
        if not np.all(np.isfinite(dz)):
            raise NumericalFailure("non-finite Gauss-Newton step")
        step = 1.0
        accepted = False
        for _ in range(40):
            zn = z + step * dz
            if lo is not None:
                zn = np.clip(zn, lo, hi)
            rn = prob.residual(zn)
            cn = float(rn @ rn)
            if cn <= cost:
                accepted = True
                break
            step *= 0.5
        it += 1
        if not accepted:
            reason = "stationary"
            break
        moved = float(np.linalg.norm(zn - z))
        z, r, cost = zn, rn, cn
        history.append(cost)
        g = 2.0 * J.T @ r
        if moved <= 1e-12 * (1.0 + float(np.linalg.norm(z))):
            reason = "step"
            break
    diag = MheDiagnostics(it, cost, float(np.linalg.norm(g)), history, reason)
    return MheResult(prob.unpack(z).copy(), diag)


@dataclass
class MheConfig:
    horizon: int = 20
    rate_hz: float = 100.0
    max_iter: int = 25
    grad_tol: float = 1e-9
    noise_floor: float = 0.5
    prior_sigma: tuple = (0.05, 0.1, 5.0)  # P, V, F
    bounds: tuple | None = None

    @classmethod
    def from_dict(cls, d: dict | None) -> "MheConfig":
        d = dict(d or {})
        if d.get("prior_sigma") is not None:
            d["prior_sigma"] = tuple(d["prior_sigma"])
        if d.get("bounds") is not None:
            d["bounds"] = tuple(tuple(b) for b in d["bounds"])
        return cls(**d)


@dataclass
class EstimatorOutput:
    t: float
    state: np.ndarray
    gamma_hat: float
    cost: float
    iterations: int


class MovingHorizonEstimator:
    """Streaming estimator: push one sample per period and read back the window head.

    Until the window fills the output is NaN. When the window slides, the
    evicted sample advances the arrival-cost prior by one EKF cycle, and the
    previous solution (shifted by one) warm-starts the next solve.
    """

    def __init__(self, mass: float, gravity: float = 9.81, noise: NoiseModel | None = None,
                 cfg: MheConfig | None = None):
        self.mass, self.gravity = mass, gravity
        self.noise = noise or NoiseModel()
        self.cfg = cfg or MheConfig()
        self.dt = 1.0 / self.cfg.rate_hz
        self.window = EstimationWindow(self.cfg.horizon, self.dt)
        self._last = None
        self._primed = False

    def _prime(self, y):
        sp, sv, sf = self.cfg.prior_sigma
        self.window.prior_x = np.concatenate([y[0:6], np.zeros(3)])
        self.window.prior_P = np.diag([sp**2] * 3 + [sv**2] * 3 + [sf**2] * 3)
        self._primed = True

    def step(self, t: float, y, u: EstimatorInput) -> EstimatorOutput:
        from .inclination import gamma_or_nan

        y = np.asarray(y, dtype=float)
        if not self._primed:
            self._prime(y)
        old = self.window.push(t, y, u)
        if old is not None:
            self.window.prior_x, self.window.prior_P = arrival_cost_update(
                (self.window.prior_x, self.window.prior_P), old.y, old.u, self.noise,
                self.dt, self.mass, self.gravity)
        if not self.window.full:
            return EstimatorOutput(t, np.full(NX, math.nan), math.nan, math.nan, 0)
        warm = None
        if self._last is not None:
            warm = np.vstack([self._last[1:], self._last[-1:]])
            warm[-1, 0:6] = y[0:6]
        res = mhe_solve(self.window, self.noise, self.mass, self.gravity, self.cfg.max_iter,
                        self.cfg.grad_tol, warm_start=warm, bounds=self.cfg.bounds)
        self._last = res.states
        x = res.head.copy()
        return EstimatorOutput(t, x, gamma_or_nan(x[6:9], self.cfg.noise_floor),
                               res.diagnostics.cost, res.diagnostics.iterations)
