"""Drive-mapping and integrator tests.

The integrator oracle is plain forward Euler at a much finer step; for a
constant twist the heading is linear in time, so the Euler sums vectorize
without changing what is computed.
"""

import math
import random

import numpy as np
import pytest

from glide.chain import WheelCommand
from glide.kinematics import (
    ARC,
    IN_PLACE,
    STRAIGHT,
    DriveParams,
    InvalidRegime,
    Pose,
    Twist,
    arc_tightening,
    command_radius,
    integrate,
    normalize_angle,
    turning_radius,
    twist_from_wheels,
    wheel_speeds,
)

P = DriveParams()
P_SYM = DriveParams(backward_scale=1.0)


def euler_endpoint(pose: Pose, tw: Twist, horizon_s: float, dt: float):
    """Forward-Euler endpoint for a constant twist (vectorized sum)."""
    n = int(round(horizon_s / dt))
    thetas = pose.theta + tw.omega * dt * np.arange(n)
    x = pose.x + tw.v * dt * float(np.sum(np.cos(thetas)))
    y = pose.y + tw.v * dt * float(np.sum(np.sin(thetas)))
    return x, y


class TestNormalizeAngle:
    def test_identity_inside_range(self):
        for theta in (-3.14159, -1.0, 0.0, 1e-300, 2.0, math.pi):
            assert normalize_angle(theta) == theta

    def test_wraps(self):
        assert normalize_angle(math.pi + 0.5) == pytest.approx(-math.pi + 0.5)
        assert normalize_angle(-math.pi) == pytest.approx(math.pi)
        assert normalize_angle(7 * math.pi) == pytest.approx(math.pi)


class TestWheelSpeeds:
    def test_full_forward(self):
        assert wheel_speeds(WheelCommand(1.0, 1.0), P) == (2.0, 2.0)

    def test_neutral(self):
        assert wheel_speeds(WheelCommand(0.0, 0.0), P) == (0.0, 0.0)

    def test_backward_scaled(self):
        v_l, v_r = wheel_speeds(WheelCommand(-1.0, -1.0), P)
        assert v_l == pytest.approx(-1.2) and v_r == pytest.approx(-1.2)

    def test_scale_one_restores_symmetry(self):
        assert wheel_speeds(WheelCommand(-1.0, 0.5), P_SYM) == (-2.0, 1.0)


class TestTwist:
    def test_equal_wheels(self):
        assert twist_from_wheels(2.0, 2.0, P) == Twist(2.0, 0.0)

    def test_opposed_wheels(self):
        assert twist_from_wheels(-2.0, 2.0, P) == Twist(0.0, 8.0)

    def test_mixed(self):
        assert twist_from_wheels(1.0, 2.0, P) == Twist(1.5, 2.0)

    def test_formula_exactness_random(self):
        rng = random.Random(1)
        for _ in range(10_000):
            v_l = rng.uniform(-2, 2)
            v_r = rng.uniform(-2, 2)
            tw = twist_from_wheels(v_l, v_r, P)
            assert tw.v == (v_r + v_l) / 2.0
            assert tw.omega == (v_r - v_l) / P.track_w


class TestTurningRadius:
    def test_arc(self):
        r = turning_radius(Twist(1.5, 2.0), P)
        assert r.kind == ARC and r.r_m == pytest.approx(0.75)

    def test_straight(self):
        assert turning_radius(Twist(2.0, 0.0), P).kind == STRAIGHT

    def test_in_place(self):
        assert turning_radius(Twist(0.0, 8.0), P).kind == IN_PLACE

    def test_radius_consistency_random(self):
        rng = random.Random(2)
        for _ in range(10_000):
            tw = Twist(rng.uniform(-2, 2), rng.uniform(-8, 8))
            r = turning_radius(tw, P)
            if r.kind == ARC:
                assert r.r_m * tw.omega == pytest.approx(tw.v, rel=1e-12)

    def test_magnitudes(self):
        assert turning_radius(Twist(2.0, 0.0), P).magnitude == math.inf
        assert turning_radius(Twist(0.0, 8.0), P).magnitude == 0.0


class TestIntegrate:
    def test_straight_unit(self):
        pose = integrate(Pose(0, 0, 0), Twist(1.0, 0.0), 1.0, P)
        assert (pose.x, pose.y, pose.theta) == (1.0, 0.0, 0.0)

    def test_in_place_unit(self):
        pose = integrate(Pose(0, 0, 0), Twist(0.0, math.pi / 2), 1.0, P)
        assert (pose.x, pose.y) == (0.0, 0.0)
        assert pose.theta == pytest.approx(math.pi / 2)

    def test_quarter_circle(self):
        pose = integrate(Pose(0, 0, 0), Twist(1.0, 1.0), math.pi / 2, P)
        assert pose.x == pytest.approx(1.0, abs=1e-12)
        assert pose.y == pytest.approx(1.0, abs=1e-12)
        assert pose.theta == pytest.approx(math.pi / 2, abs=1e-12)

    def test_heading_constant_when_wheels_equal(self):
        cmd = WheelCommand(0.73, 0.73)
        tw = twist_from_wheels(*wheel_speeds(cmd, P), P)
        pose = Pose(0.3, -0.2, 1.2345)
        for _ in range(10_000):
            pose = integrate(pose, tw, 0.01, P)
        assert pose.theta == 1.2345

    def test_in_place_commands_fix_position(self):
        # opposed commands need the symmetric mapping for v to vanish exactly
        u = 0.4
        tw = twist_from_wheels(*wheel_speeds(WheelCommand(u, -u), P_SYM), P_SYM)
        assert tw.v == 0.0
        assert tw.omega == pytest.approx(2 * P_SYM.v_max * (-u) / P_SYM.track_w, rel=1e-12)
        pose = Pose(1.0, 2.0, 0.5)
        for _ in range(10_000):
            pose = integrate(pose, tw, 0.01, P_SYM)
        assert math.hypot(pose.x - 1.0, pose.y - 2.0) < 1e-9

    def test_circle_property(self):
        rng = random.Random(4)
        for _ in range(50):
            u_l = rng.uniform(0.1, 1.0)
            u_r = rng.uniform(0.1, 1.0)
            if abs(u_l - u_r) < 1e-3:
                u_r += 0.1
            tw = twist_from_wheels(*wheel_speeds(WheelCommand(u_l, u_r), P), P)
            r = tw.v / tw.omega
            pose = Pose(0, 0, rng.uniform(-3, 3))
            cx = pose.x - r * math.sin(pose.theta)
            cy = pose.y + r * math.cos(pose.theta)
            for _ in range(500):
                pose = integrate(pose, tw, 0.02, P)
                dev = abs(math.hypot(pose.x - cx, pose.y - cy) - abs(r))
                assert dev < 1e-9

    def test_euler_oracle_agreement(self):
        rng = random.Random(6)
        for _ in range(20):
            cmd = WheelCommand(rng.uniform(-1, 1), rng.uniform(-1, 1))
            tw = twist_from_wheels(*wheel_speeds(cmd, P), P)
            pose = Pose(0, 0, rng.uniform(-3, 3))
            exact = pose
            for _ in range(500):  # 5 s at 10 ms
                exact = integrate(exact, tw, 0.01, P)
            ex, ey = euler_endpoint(pose, tw, 5.0, 1e-5)
            assert math.hypot(exact.x - ex, exact.y - ey) < 1e-3

    def test_mirror_symmetry(self):
        rng = random.Random(8)
        for _ in range(100):
            u_l = rng.uniform(-1, 1)
            u_r = rng.uniform(-1, 1)
            a = Pose(0, 0, 0)
            b = Pose(0, 0, 0)
            tw_a = twist_from_wheels(*wheel_speeds(WheelCommand(u_l, u_r), P), P)
            tw_b = twist_from_wheels(*wheel_speeds(WheelCommand(u_r, u_l), P), P)
            for _ in range(200):
                a = integrate(a, tw_a, 0.02, P)
                b = integrate(b, tw_b, 0.02, P)
                # reflection across the initial heading line (the x axis)
                assert abs(a.x - b.x) < 1e-9
                assert abs(a.y + b.y) < 1e-9

    def test_rejects_nonpositive_dt(self):
        with pytest.raises(ValueError):
            integrate(Pose(), Twist(1, 0), 0.0, P)


class TestArcTightening:
    def test_radius_values_from_oracle(self):
        # frozen by direct substitution into the v/omega quotient at
        # v_max = 2, W = 0.5
        assert command_radius(WheelCommand(0.6, 0.4), P).magnitude == pytest.approx(1.25)
        assert command_radius(WheelCommand(0.7, 0.3), P).magnitude == pytest.approx(0.625)
        assert command_radius(WheelCommand(0.9, 0.1), P).magnitude == pytest.approx(0.3125)
        assert command_radius(WheelCommand(0.8, 0.2), P).magnitude == pytest.approx(
            0.41666666666666663
        )

    def test_tightening_pairs(self):
        assert arc_tightening(WheelCommand(0.6, 0.4), WheelCommand(0.7, 0.3), P)
        assert arc_tightening(WheelCommand(0.8, 0.2), WheelCommand(0.9, 0.1), P)

    def test_straight_dominates_any_arc(self):
        assert arc_tightening(WheelCommand(0.5, 0.5), WheelCommand(0.6, 0.4), P)

    def test_invalid_regime(self):
        with pytest.raises(InvalidRegime):
            arc_tightening(WheelCommand(0.5, -0.1), WheelCommand(0.6, 0.4), P)
        with pytest.raises(InvalidRegime):
            arc_tightening(WheelCommand(0.5, 0.5), WheelCommand(0.9, 0.2), P)

    def test_monotone_sweep(self):
        u_sum = 1.2
        prev = math.inf
        for k in range(1, 51):
            d = 0.75 * k / 50  # keeps both wheels positive and u <= 1
            mag = command_radius(
                WheelCommand((u_sum - d) / 2, (u_sum + d) / 2), P
            ).magnitude
            assert mag < prev
            prev = mag
