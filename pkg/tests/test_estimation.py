import csv
import math
import time

import numpy as np
import pytest

from hybridmanip.errors import NoReliableContact
from hybridmanip.estimation import (
    NX,
    NY,
    EstimationWindow,
    EstimatorInput,
    MheConfig,
    MovingHorizonEstimator,
    NoiseModel,
    arrival_cost_update,
    ekf_update,
    fold_force_into_input,
    gamma_or_nan,
    inclination_from_force,
    measurement_jacobian,
    measurement_model,
    mhe_solve,
    process_jacobian,
    process_model,
    replay,
    stacked_problem,
    write_estimates,
)
from hybridmanip.rotations import euler_to_matrix

M, G, DT = 2.22, 9.81, 0.01


def test_process_model_examples():
    x = np.zeros(NX)
    # hover thrust and no force: nothing moves
    assert np.allclose(process_model(x, EstimatorInput(M * G), DT, M, G), 0.0)
    # free fall
    x1 = process_model(x, EstimatorInput(0.0), DT, M, G)
    assert np.allclose(x1[3:6], [0, 0, -G * DT]) and np.allclose(x1[0:3], 0.0)
    # external force accelerates and is held constant
    x = np.r_[np.zeros(3), [1.0, 0, 0], [M, 0, 0]]
    x1 = process_model(x, EstimatorInput(M * G), DT, M, G)
    assert np.allclose(x1, np.r_[[DT, 0, 0], [1.0 + DT, 0, 0], [M, 0, 0]])
    with pytest.raises(ValueError):
        process_model(x, EstimatorInput(0.0), 0.0, M, G)


def test_measurement_model_examples():
    x = np.arange(NX, dtype=float)
    u = EstimatorInput(10.0, 0.1, 0.2, 0.3)
    assert np.allclose(measurement_model(x, u), [0, 1, 2, 3, 4, 5, 10.0, 0.1, 0.2, 0.3])
    assert measurement_jacobian().shape == (NY, NX)


def test_jacobians_match_finite_differences():
    rng = np.random.default_rng(0)
    h = 1e-6
    for _ in range(100):
        x = rng.normal(size=NX)
        u = EstimatorInput(abs(rng.normal(20.0, 3.0)), *rng.uniform(-0.5, 0.5, 3))
        A = process_jacobian(DT, M)
        H = measurement_jacobian()
        for j in range(NX):
            e = np.zeros(NX)
            e[j] = h
            dA = (process_model(x + e, u, DT, M, G) - process_model(x - e, u, DT, M, G)) / (2 * h)
            dH = (measurement_model(x + e, u) - measurement_model(x - e, u)) / (2 * h)
            assert np.allclose(dA, A[:, j], atol=1e-8)
            assert np.allclose(dH, H[:, j], atol=1e-8)


def test_fold_force_into_input_adds_force():
    u = EstimatorInput(20.0, 0.1, -0.2, 0.7)
    f = np.array([0.3, -0.4, 1.2])
    v = fold_force_into_input(u, f)
    assert np.allclose(v.thrust_world(), u.thrust_world() + f, atol=1e-12)
    assert v.psi == u.psi


def test_ekf_keeps_covariance_spd_and_ignores_useless_measurements():
    rng = np.random.default_rng(1)
    noise = NoiseModel()
    x, P = rng.normal(size=NX), np.eye(NX)
    u = EstimatorInput(M * G)
    for _ in range(200):
        y = np.r_[rng.normal(size=6), u.to_vector()]
        x, P = arrival_cost_update((x, P), y, u, noise, DT, M, G)
        assert np.allclose(P, P.T)
        assert np.linalg.eigvalsh(P).min() > 0
    # infinite measurement noise leaves the state untouched
    big = np.eye(NY) * 1e30
    x2, P2 = ekf_update(x, P, rng.normal(size=NY), u, big)
    assert np.allclose(x2, x, atol=1e-20) and np.allclose(P2, P, rtol=1e-12)


def test_noise_model_validation():
    with pytest.raises(ValueError):
        NoiseModel(Q=-np.ones(NX))
    with pytest.raises(ValueError):
        NoiseModel(R=np.ones(3))
    n = NoiseModel.from_dict({"Q": {"F": 0.1}, "R": {"P": 1e-6}})
    assert n.Q[8, 8] == 0.1 and n.R[0, 0] == 1e-6


def _synthetic(F, n, u=None, x0=None):
    """Noise-free samples generated by the process model itself."""
    u = u or EstimatorInput(M * G, 0.05, -0.03, 0.4)
    x = np.r_[np.zeros(6), F] if x0 is None else np.asarray(x0, dtype=float)
    out = []
    for k in range(n):
        out.append((k * DT, measurement_model(x, u), u, x.copy()))
        x = process_model(x, u, DT, M, G)
    return out


def _window(samples, N, prior_x=None, prior_P=None):
    w = EstimationWindow(N, DT, prior_x, prior_P)
    for t, y, u, _ in samples[-(N + 1):]:
        w.push(t, y, u)
    return w


def test_mhe_zero_force_at_hover():
    w = _window(_synthetic(np.zeros(3), 21, EstimatorInput(M * G)), 20)
    res = mhe_solve(w, NoiseModel(), M, G, arrival=False)
    assert np.allclose(res.force, 0.0, atol=1e-9)


def test_mhe_recovers_constant_force():
    F = np.array([1.0, 0.0, 2.0])
    samples = _synthetic(F, 21)
    res = mhe_solve(_window(samples, 20), NoiseModel(), M, G, arrival=False)
    assert np.abs(res.force - F).max() < 1e-6
    assert np.allclose(res.states, np.array([s[3] for s in samples]), atol=1e-6)
    # an exact prior does not move the optimum
    w = _window(samples, 20, prior_x=samples[0][3], prior_P=np.eye(NX))
    res = mhe_solve(w, NoiseModel(), M, G)
    assert np.abs(res.force - F).max() < 1e-6


def test_mhe_cost_monotone():
    rng = np.random.default_rng(2)
    samples = _synthetic(np.array([0.5, -0.3, 1.0]), 21)
    noisy = [(t, y + np.r_[rng.normal(0, 0.01, 6), np.zeros(4)], u, x) for t, y, u, x in samples]
    res = mhe_solve(_window(noisy, 20), NoiseModel(), M, G)
    h = res.diagnostics.cost_history
    assert all(b <= a for a, b in zip(h, h[1:]))
    assert res.diagnostics.reason in ("gradient", "step", "stationary")


def test_stacked_jacobian_is_exact():
    samples = _synthetic(np.array([0.2, 0.1, -0.3]), 6)
    w = _window(samples, 5)
    r, J = stacked_problem(w, NoiseModel(), M, G)
    z = np.random.default_rng(3).normal(size=6 * NX)
    h = 1e-6
    for j in range(0, z.size, 7):
        e = np.zeros(z.size)
        e[j] = h
        assert np.allclose((r(z + e) - r(z - e)) / (2 * h), J[:, j], rtol=1e-6, atol=1e-4)


def test_mhe_solve_is_fast_enough():
    samples = _synthetic(np.array([1.0, 0.0, 2.0]), 21)
    w = _window(samples, 20)
    noise = NoiseModel()
    times = []
    for _ in range(7):
        t0 = time.perf_counter()
        mhe_solve(w, noise, M, G)
        times.append(time.perf_counter() - t0)
    assert float(np.median(times)) < 0.010


def test_window_rejects_bad_spacing_and_partial_solve():
    w = EstimationWindow(3, DT)
    u = EstimatorInput(M * G)
    w.push(0.0, np.zeros(NY), u)
    with pytest.raises(ValueError):
        w.push(0.5, np.zeros(NY), u)
    with pytest.raises(ValueError):
        mhe_solve(w, NoiseModel(), M, G)


def test_streaming_estimator_slides_consistently():
    F = np.array([1.0, 0.0, 2.0])
    samples = _synthetic(F, 80)
    est = MovingHorizonEstimator(M, G, cfg=MheConfig(horizon=10, rate_hz=1 / DT))
    outs = [est.step(t, y, u) for t, y, u, _ in samples]
    assert all(math.isnan(o.gamma_hat) for o in outs[:10])
    assert not math.isnan(outs[10].gamma_hat)
    # the zero-force arrival prior biases early windows; the bias decays as the window slides
    err = [np.abs(o.state[6:9] - F).max() for o in outs[10:]]
    assert err[-1] < 0.2 * err[0] and err[-1] < 5e-3
    assert outs[-1].gamma_hat == pytest.approx(math.atan2(1.0, 2.0), abs=5e-3)


def test_inclination_examples():
    assert inclination_from_force([0, 0, 5.0]) == 0.0
    assert inclination_from_force([5.0, 0, 5.0]) == pytest.approx(math.pi / 4)
    assert inclination_from_force([0, -3.0, 0]) == pytest.approx(math.pi / 2)
    n = euler_to_matrix(0.0, math.radians(60), 0.7)[:, 2]
    for s in (0.6, 1.0, 40.0):
        assert inclination_from_force(s * n) == pytest.approx(math.radians(60), abs=1e-12)
    with pytest.raises(NoReliableContact):
        inclination_from_force([0.1, 0.0, 0.2])
    assert math.isnan(gamma_or_nan([0.0, 0.0, 0.0]))


def test_replay_round_trip(tmp_path):
    F = np.array([0.5, 0.0, 1.5])
    samples = _synthetic(F, 40)
    table = np.array([[t, *y, *u.to_vector()] for t, y, u, _ in samples])
    rows = replay(table, M, G, horizon=10)
    assert rows.shape == (40, 13)
    out = tmp_path / "est.csv"
    write_estimates(out, rows)
    with open(out, newline="") as fh:
        back = list(csv.DictReader(fh))
    assert len(back) == 40 and back[0]["gamma_hat"] == "nan"
    assert np.allclose([float(back[-1][f"x{i}"]) for i in range(1, 10)], rows[-1, 1:10], rtol=0, atol=0)
    assert float(back[-1]["x7"]) == pytest.approx(F[0], abs=5e-3)
    assert float(back[-1]["gamma_hat"]) == pytest.approx(math.atan2(0.5, 1.5), abs=5e-3)
