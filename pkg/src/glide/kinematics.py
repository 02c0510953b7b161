"""Differential-drive mapping and exact-arc pose integration.

Wheel commands scale to virtual wheel speeds, the wheel pair maps to a body
twist (v, omega), and the twist classifies into straight motion, an in-place
turn, or an arc with signed turning radius v/omega.  Pose integration uses the
closed-form constant-twist arc so trajectories do not bend with frame rate.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

from .chain import WheelCommand

TWO_PI = 2.0 * math.pi


class InvalidRegime(ValueError):
    pass


@dataclass(frozen=True)
class DriveParams:
    """Virtual vehicle parameters.

    v_max is the wheel speed at full forward command; track_w the virtual
    track width between the two foot-wheels; backward_scale slows reverse
    drive (1.0 restores a fully symmetric mapping); omega_eps guards the
    v/omega singularity when classifying and integrating.
    """

    v_max: float = 2.0
    track_w: float = 0.5
    backward_scale: float = 0.6
    omega_eps: float = 1e-9

    def __post_init__(self):
        if self.v_max <= 0 or self.track_w <= 0:
            raise ValueError("v_max and track_w must be > 0")
        if not 0.0 < self.backward_scale <= 1.0:
            raise ValueError("backward_scale must be in (0, 1]")


class Twist(NamedTuple):
    """Body-frame velocity: forward speed v (m/s) and yaw rate omega (rad/s)."""

    v: float
    omega: float


@dataclass(frozen=True)
class Pose:
    """World-frame avatar state; theta normalized to (-pi, pi]."""

    x: float = 0.0
    y: float = 0.0
    theta: float = 0.0


STRAIGHT = "straight"
IN_PLACE = "in_place"
ARC = "arc"


@dataclass(frozen=True)
class Radius:
    """Instantaneous turning-circle classification.

    kind is one of "straight", "in_place", "arc"; magnitude is +inf, 0, or the
    arc radius |r_m|.  Arc radii are signed, positive for a left turn.
    """

    kind: str
    r_m: float | None = None

    @classmethod
    def straight(cls) -> "Radius":
        return cls(STRAIGHT)

    @classmethod
    def in_place(cls) -> "Radius":
        return cls(IN_PLACE)

    @classmethod
    def arc(cls, r_m: float) -> "Radius":
        if r_m == 0.0:
            raise ValueError("arc radius must be nonzero")
        return cls(ARC, r_m)

    @property
    def magnitude(self) -> float:
        if self.kind == STRAIGHT:
            return math.inf
        if self.kind == IN_PLACE:
            return 0.0
        return abs(self.r_m)  # type: ignore[arg-type]


def normalize_angle(theta: float) -> float:
    """Wrap an angle into (-pi, pi]."""
    if -math.pi < theta <= math.pi:
        return theta
    t = math.fmod(theta + math.pi, TWO_PI)
    if t <= 0.0:
        t += TWO_PI
    return t - math.pi


def wheel_speeds(cmd: WheelCommand, p: DriveParams) -> tuple[float, float]:
    """Scale normalized commands to wheel speeds; reverse drive is slowed by
    backward_scale."""

    def scale(u: float) -> float:
        return p.v_max * u if u >= 0.0 else p.backward_scale * p.v_max * u

    return scale(cmd.u_l), scale(cmd.u_r)


def twist_from_wheels(v_l: float, v_r: float, p: DriveParams) -> Twist:
    """Differential-drive kinematics: v = (v_r + v_l)/2, omega = (v_r - v_l)/W."""
    return Twist((v_r + v_l) / 2.0, (v_r - v_l) / p.track_w)


def turning_radius(t: Twist, p: DriveParams) -> Radius:
    """Classify a twist into straight / in-place / arc with radius v/omega."""
    if abs(t.omega) <= p.omega_eps:
        return Radius.straight()
    if abs(t.v) <= p.omega_eps * p.track_w:
        return Radius.in_place()
    return Radius.arc(t.v / t.omega)


def integrate(pose: Pose, t: Twist, dt_s: float, p: DriveParams) -> Pose:
    """Advance a pose under a constant twist for dt_s using the exact arc.

    Near-zero omega falls back to the straight-line limit; otherwise the
    closed-form circular update is applied, so step size never distorts the
    trajectory shape.
    """
    if dt_s <= 0:
        raise ValueError(f"dt_s must be > 0, got {dt_s}")
    theta = pose.theta
    if abs(t.omega) <= p.omega_eps:
        x = pose.x + t.v * math.cos(theta) * dt_s
        y = pose.y + t.v * math.sin(theta) * dt_s
    else:
        r = t.v / t.omega
        theta1 = theta + t.omega * dt_s
        x = pose.x + r * (math.sin(theta1) - math.sin(theta))
        y = pose.y + r * (math.cos(theta) - math.cos(theta1))
    return Pose(x, y, normalize_angle(theta + t.omega * dt_s))


def command_radius(cmd: WheelCommand, p: DriveParams) -> Radius:
    """Turning-circle classification of a command pair."""
    return turning_radius(twist_from_wheels(*wheel_speeds(cmd, p), p), p)


def arc_tightening(cmd_lo: WheelCommand, cmd_hi: WheelCommand, p: DriveParams) -> bool:
    """Check that the higher-imbalance command turns on a strictly smaller circle.

    Both commands must drive every wheel forward (same-sign arc regime) and
    share their command sum; a straight cmd_lo (infinite radius) is tightened
    by any arc.
    """
    speeds = wheel_speeds(cmd_lo, p) + wheel_speeds(cmd_hi, p)
    if any(v <= 0.0 for v in speeds):
        raise InvalidRegime(f"wheel speeds {speeds} must all be positive")
    if not math.isclose(cmd_lo.u_l + cmd_lo.u_r, cmd_hi.u_l + cmd_hi.u_r,
                        rel_tol=0.0, abs_tol=1e-12):
        raise InvalidRegime("command sums differ; comparison needs a fixed sum")
    return command_radius(cmd_hi, p).magnitude < command_radius(cmd_lo, p).magnitude
