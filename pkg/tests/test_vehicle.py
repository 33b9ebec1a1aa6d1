import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hybridmanip.errors import ContactError, ContactLostError, EulerSingularityError
from hybridmanip.rotations import euler_to_matrix, matrix_to_euler, rot_y, wrap_angle
from hybridmanip.vehicle import (
    RigidBodyState,
    RotorCommand,
    SurfaceModel,
    TerrestrialState,
    VehicleParams,
    aerial_derivatives,
    com_gravity_torque,
    contact_attitude,
    friction_forces,
    from_surface_coords,
    gravity_rolling,
    rigid_to_terrestrial,
    rolling_rotations,
    rotor_wrench_rolling,
    terrestrial_body_rotation,
    terrestrial_derivatives,
    terrestrial_to_rigid,
    to_surface_coords,
    wheel_clearance,
)
from hybridmanip.wrench import Wrench

P = VehicleParams()
ZERO_BODY = Wrench.zero("body")
ZERO_ROLL = Wrench.zero("rolling")


# ---- contact geometry --------------------------------------------------------

def test_contact_attitude_examples():
    phi, dpsi, delta = contact_attitude(0.0, 0.7)
    assert (phi, dpsi, delta) == (0.0, pytest.approx(0.7, abs=1e-15), 0.0)
    phi, dpsi, _ = contact_attitude(math.pi / 2, math.pi / 6)
    assert phi == pytest.approx(-math.pi / 6, abs=1e-15) and dpsi == pytest.approx(0.0, abs=1e-16)
    phi, dpsi, delta = contact_attitude(math.pi / 6, 0.0)
    assert (phi, dpsi) == (0.0, 0.0) and delta == pytest.approx(math.pi / 6, abs=1e-15)
    # vertical wall straight up: delta finite
    assert contact_attitude(math.pi / 2, 0.0)[2] == pytest.approx(math.pi / 2, abs=1e-15)


def test_contact_attitude_consistent_with_plane_geometry():
    rng = np.random.default_rng(0)
    for _ in range(1000):
        g = rng.uniform(0.0, math.pi / 2)
        a = rng.uniform(-math.pi, math.pi)
        b = rng.uniform(-1.5, 1.5)
        surf = SurfaceModel(gamma=g)
        phi, dpsi, _ = contact_attitude(g, a)
        # attitude built from (phi, delta-psi) and any pitch keeps the axle in the plane
        R = euler_to_matrix(phi, b, dpsi)
        n = np.array([-math.sin(g), 0.0, math.cos(g)])
        centre = from_surface_coords(surf, [0.3, -0.2, P.wheel_radius])
        for side in (1.0, -1.0):
            contact = centre + side * P.half_track * R[:, 1] - P.wheel_radius * n
            assert abs(n @ (contact - surf.origin)) < 1e-9
        # and matches the rolling-frame construction in roll and yaw
        eta = matrix_to_euler(terrestrial_body_rotation(surf, a, b))
        assert abs(eta[0] - phi) < 1e-9 and abs(wrap_angle(eta[2] - dpsi)) < 1e-9


def test_rolling_rotations_identity_and_orthonormal():
    R_wr, R_br = rolling_rotations(0.0, 0.0, 0.0, 0.0, 0.0)
    assert np.allclose(R_wr, np.eye(3)) and np.allclose(R_br, np.eye(3))
    _, R_br = rolling_rotations(0.4, 0.2, 0.1, 0.3, -0.3)
    assert np.allclose(R_br, np.eye(3), atol=1e-16)
    rng = np.random.default_rng(1)
    for _ in range(1000):
        g = rng.uniform(0, math.pi / 2)
        a, psi, d, t = rng.uniform(-3, 3, 4)
        for R in rolling_rotations(g, a, psi, d, t):
            assert np.abs(R @ R.T - np.eye(3)).max() < 1e-12
            assert abs(np.linalg.det(R) - 1.0) < 1e-12


def test_rotor_wrench_rolling_examples():
    cmd = RotorCommand(10.0, 0.1, 0.2, 0.05)
    F, M = rotor_wrench_rolling(cmd, 0.0)
    assert np.allclose(F, [0, 0, 10]) and np.allclose(M, [0.1, 0.2, 0.05])
    F, M = rotor_wrench_rolling(cmd, math.pi / 2)
    assert np.allclose(F, [10, 0, 0]) and np.allclose(M, [0.05, 0.2, -0.1])
    F, M = rotor_wrench_rolling(cmd, 0.3)
    assert np.allclose(F, rot_y(0.3) @ [0, 0, 10], atol=1e-15)
    assert np.allclose(M, rot_y(0.3) @ [0.1, 0.2, 0.05], atol=1e-15)


def test_surface_coordinates_round_trip():
    surf = SurfaceModel(gamma=0.8, azimuth=0.3, origin=np.array([0.5, -1.0, 0.2]))
    p = np.array([1.0, 2.0, 3.0])
    assert np.allclose(from_surface_coords(surf, to_surface_coords(surf, p)), p)
    up = from_surface_coords(surf, [1.0, 0.0, 0.0]) - surf.origin
    assert up[2] > 0  # surface x points up-slope


def test_rigid_terrestrial_round_trip():
    surf = SurfaceModel(gamma=1.0)
    terr = TerrestrialState(np.array([0.2, -0.4]), 0.7, 0.3, -0.5, 0.2, 0.4)
    rb = terrestrial_to_rigid(terr, surf, P)
    back = rigid_to_terrestrial(rb, surf, P)
    for k in ("alpha", "alpha_rate", "beta", "beta_rate", "v_rx"):
        assert getattr(back, k) == pytest.approx(getattr(terr, k), abs=1e-12)
    assert np.allclose(back.surface_xy, terr.surface_xy)
    assert wheel_clearance(rb, surf, P) == pytest.approx(0.0, abs=1e-12)


# ---- aerial dynamics --------------------------------------------------------

def test_hover_equilibrium():
    d = aerial_derivatives(RigidBodyState(), RotorCommand(P.mass * P.gravity), ZERO_BODY, P)
    assert np.allclose(d.value, 0.0, atol=1e-14)


def test_free_fall():
    d = aerial_derivatives(RigidBodyState(), RotorCommand(), ZERO_BODY, P)
    assert np.allclose(d.accel_world, [0, 0, -P.gravity])


@settings(max_examples=100, deadline=None)
@given(st.lists(st.floats(-1.2, 1.2), min_size=12, max_size=12), st.floats(0, 40))
def test_aerial_matches_independent_evaluator(v, U1):
    s = RigidBodyState(np.array(v[0:3]), np.array(v[3:6]), np.array(v[6:9]), np.array(v[9:12]))
    cmd = RotorCommand(U1, 0.1, -0.2, 0.05)
    arm = Wrench([0.3, -0.1, 0.2], [0.01, 0.02, -0.03], "body")
    d = aerial_derivatives(s, cmd, arm, P)
    phi, th, psi = s.attitude
    cf, sf, ct, st_, cp, sp = math.cos(phi), math.sin(phi), math.cos(th), math.sin(th), math.cos(psi), math.sin(psi)
    # Rz(psi) Rx(phi) Ry(theta), written out
    R = np.array([
        [cp * ct - sp * sf * st_, -sp * cf, cp * st_ + sp * sf * ct],
        [sp * ct + cp * sf * st_, cp * cf, sp * st_ - cp * sf * ct],
        [-cf * st_, sf, cf * ct],
    ])
    res = P.mass * d.accel_world + P.mass * np.array([0, 0, P.gravity]) - R @ (np.array([0, 0, U1]) + arm.force)
    assert np.abs(res).max() < 1e-10
    w = s.omega
    I = P.inertia
    assert np.allclose(I @ d.omega_dot_body + np.cross(w, I @ w), cmd.torque + arm.torque, atol=1e-10)


def test_aerial_requires_body_wrench_and_guards_singularity():
    from hybridmanip.errors import FrameMismatchError

    with pytest.raises(FrameMismatchError):
        aerial_derivatives(RigidBodyState(), RotorCommand(), Wrench.zero("world"), P)
    with pytest.raises(EulerSingularityError):
        aerial_derivatives(RigidBodyState(attitude=np.array([math.pi / 2, 0, 0])), RotorCommand(), ZERO_BODY, P)


# ---- friction and terrestrial dynamics --------------------------------------

def test_friction_examples():
    surf = SurfaceModel(mu_r=0.02, friction_speed_eps=0.0)
    even = TerrestrialState(v_rx=0.5, alpha_rate=0.3, F_n=23.5, F_left=11.75, F_right=11.75)
    f_roll, f_wh, tau_roll, tau_wh = friction_forces(even, P, surf, 0.4, 0.2)
    assert np.allclose(tau_roll, 0.0)
    assert np.linalg.norm(f_roll) == pytest.approx(0.47, abs=1e-12) and f_roll[0] < 0
    assert f_wh[0] == pytest.approx(2 * P.wheel_inertia * 0.4 / P.wheel_radius**2)
    assert tau_wh[2] == pytest.approx(2 * P.wheel_inertia * 0.2 * P.half_track**2 / P.wheel_radius**2)
    _, f_wh, _, tau_wh = friction_forces(even, P.with_(wheel_inertia=0.0), surf, 0.4, 0.2)
    assert np.allclose(f_wh, 0.0) and np.allclose(tau_wh, 0.0)
    with pytest.raises(ContactError):
        friction_forces(even, P, SurfaceModel(in_contact=False), 0.0, 0.0)


def test_flat_rest_equilibrium():
    surf = SurfaceModel()
    d, F_n, F_l, F_r, slip = terrestrial_derivatives(TerrestrialState(), RotorCommand(), ZERO_ROLL, surf, P)
    assert d.value[6] == 0.0
    assert F_n == pytest.approx(P.mass * P.gravity) and F_l == pytest.approx(F_r) and not slip


def test_flat_thrust_balances_rolling_friction():
    surf = SurfaceModel(mu_r=0.02, friction_speed_eps=0.0)
    # U1 sin(b) = mu (m g - U1 cos(b)) for U1 = 5 N
    U1, mg, mu = 5.0, P.mass * P.gravity, 0.02
    b = math.asin(mu * mg / (U1 * math.hypot(1.0, mu))) - math.atan(mu)
    d, F_n, *_ = terrestrial_derivatives(TerrestrialState(v_rx=0.3, beta=b), RotorCommand(U1), ZERO_ROLL, surf, P)
    assert U1 * math.sin(b) == pytest.approx(mu * F_n, rel=1e-12)
    assert abs(d.value[6]) < 1e-14


def _plane_oracle(gamma, alpha, beta, U1, mu_r, v):
    """Normal force and along-track acceleration from world-frame vectors."""
    e1 = np.array([math.cos(gamma), 0.0, math.sin(gamma)])
    e2 = np.array([0.0, 1.0, 0.0])
    n = np.array([-math.sin(gamma), 0.0, math.cos(gamma)])
    x = math.cos(alpha) * e1 + math.sin(alpha) * e2
    z_b = math.sin(beta) * x + math.cos(beta) * n
    w = np.array([0.0, 0.0, -P.mass * P.gravity])  # weight
    F_n = -(w @ n) - U1 * (z_b @ n)
    drive = U1 * (z_b @ x) + w @ x - mu_r * F_n * math.copysign(1.0, v)
    return F_n, drive / (P.mass + 2 * P.wheel_inertia / P.wheel_radius**2)


@pytest.mark.parametrize("gamma,alpha,beta,U1", [
    (math.pi / 3, 0.0, 1.2, 15.0),
    (math.pi / 3, 0.6, 0.9, 12.0),
    (0.3, -2.0, -0.4, 20.0),
    (math.pi / 2, 1.0, 2.0, 9.0),
])
def test_terrestrial_force_balance_oracle(gamma, alpha, beta, U1):
    surf = SurfaceModel(gamma=gamma, mu_r=0.02, friction_speed_eps=0.0)
    terr = TerrestrialState(alpha=alpha, beta=beta, v_rx=0.2)
    d, F_n, F_l, F_r, _ = terrestrial_derivatives(terr, RotorCommand(U1), ZERO_ROLL, surf, P)
    F_ref, a_ref = _plane_oracle(gamma, alpha, beta, U1, 0.02, 0.2)
    assert F_n == pytest.approx(F_ref, rel=1e-12)
    assert d.value[6] == pytest.approx(a_ref, rel=1e-12, abs=1e-13)
    assert F_l + F_r == pytest.approx(F_n)


def test_contact_lost_and_no_contact():
    with pytest.raises(ContactLostError):
        terrestrial_derivatives(TerrestrialState(), RotorCommand(40.0), ZERO_ROLL, SurfaceModel(), P)
    with pytest.raises(ContactError):
        terrestrial_derivatives(TerrestrialState(), RotorCommand(), ZERO_ROLL, SurfaceModel(in_contact=False), P)


def test_slip_flag_on_steep_sideways_rest():
    # heading across a wall: the full weight is lateral, only a small normal force
    surf = SurfaceModel(gamma=math.pi / 2, mu_smax=0.7)
    terr = TerrestrialState(alpha=math.pi / 2, beta=math.pi)
    d, F_n, *_ , slip = terrestrial_derivatives(terr, RotorCommand(5.0), ZERO_ROLL, surf, P)
    assert F_n == pytest.approx(5.0) and slip and d.slip_flag


def test_normal_force_continuous_in_gamma():
    cmd = RotorCommand(10.0)
    # thrust leaning into the surface keeps contact at every inclination
    terr = TerrestrialState(alpha=0.3, beta=math.pi - 0.2)
    gs = np.linspace(0.0, math.pi / 2, 2001)
    F = np.array([terrestrial_derivatives(terr, cmd, ZERO_ROLL, SurfaceModel(gamma=g), P)[1] for g in gs])
    # |dF_n/dgamma| <= m g, so steps are bounded by m g * dgamma
    assert np.abs(np.diff(F)).max() <= P.mass * P.gravity * (gs[1] - gs[0]) * (1 + 1e-9)


def test_rolling_friction_monotone():
    terr = TerrestrialState(alpha=0.0, beta=0.1, v_rx=0.5)
    acc = [terrestrial_derivatives(terr, RotorCommand(8.0), ZERO_ROLL, SurfaceModel(gamma=0.2, mu_r=mu), P)[0].value[6]
           for mu in (0.0, 0.01, 0.05, 0.2)]
    assert all(a > b for a, b in zip(acc, acc[1:]))


def test_com_gravity_torque_examples():
    f_g = gravity_rolling(P, SurfaceModel(), 0.0)
    assert np.allclose(com_gravity_torque(P, f_g), 0.0)
    assert np.allclose(com_gravity_torque(P.with_(com_offset=np.array([0, 0, 0.05])), f_g), 0.0)
    f_g = gravity_rolling(P, SurfaceModel(gamma=math.pi / 4), 0.0)
    mg = P.mass * P.gravity
    c = math.sqrt(0.5)
    assert np.allclose(f_g, [mg * c, 0, mg * c])
    tau = com_gravity_torque(P.with_(com_offset=np.array([0.01, 0, 0.02])), f_g)
    # (0.01, 0, 0.02) x (a, 0, a) = (0, 0.02a - 0.01a, 0)
    assert np.allclose(tau, [0.0, 0.01 * mg * c, 0.0], atol=1e-15)


def test_parameter_validation():
    with pytest.raises(ValueError):
        VehicleParams(mass=-1.0)
    with pytest.raises(ValueError):
        SurfaceModel(gamma=2.0)
