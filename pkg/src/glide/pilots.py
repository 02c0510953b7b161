"""Scripted pilots that stand in for human participants.

Both pilots close the loop through raw pressure frames, never through the
technique's internals: the glide pilot inverts the fore-aft normalization and
dead-zone rescale to write frames the full filter chain then re-processes, and
the walking-in-place pilot emits gesture pulse frames whose rising edges the
baseline technique detects.  They are intentionally simple (pure pursuit and
greedy snap selection) so trials measure the techniques' kinematic
vocabularies, not pilot cleverness.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .chain import ChainConfig, WheelCommand
from .frames import CHANNEL_MAX, PressureFrame
from .kinematics import DriveParams, Pose, normalize_angle
from .paths import PathCursor, Scenario

NEUTRAL_RAW = 500


@dataclass(frozen=True)
class PilotConfig:
    """Shared pilot parameters.

    gesture_period_s paces the walking-in-place pilot's stepping cadence (a
    human gesture rate; the technique's own refractory window is far shorter
    and paces a machine, not a person).
    """

    lookahead_m: float = 1.5
    cruise_frac: float = 0.8
    heading_tol_deg: float = 15.0
    timeout_s: float = 600.0
    gesture_period_s: float = 0.65

    def __post_init__(self):
        if self.lookahead_m <= 0:
            raise ValueError("lookahead_m must be > 0")
        if not 0.0 < self.cruise_frac <= 1.0:
            raise ValueError("cruise_frac must be in (0, 1]")
        if self.heading_tol_deg <= 0 or self.timeout_s <= 0:
            raise ValueError("heading_tol_deg and timeout_s must be > 0")
        if self.gesture_period_s <= 0:
            raise ValueError("gesture_period_s must be > 0")


def _clamp_raw(v: float) -> int:
    return min(max(round(v), 0), CHANNEL_MAX)


def frame_from_fore_aft(s_l: float, s_r: float, t_us: int, p_span: float) -> PressureFrame:
    """Raw frame realizing the given fore-aft differentials around the
    neutral level (antisymmetric fore/rear split)."""
    return PressureFrame(
        t_us,
        _clamp_raw(NEUTRAL_RAW + s_l * p_span / 2.0),
        _clamp_raw(NEUTRAL_RAW - s_l * p_span / 2.0),
        _clamp_raw(NEUTRAL_RAW + s_r * p_span / 2.0),
        _clamp_raw(NEUTRAL_RAW - s_r * p_span / 2.0),
    )


def neutral_frame(t_us: int) -> PressureFrame:
    return PressureFrame(t_us, NEUTRAL_RAW, NEUTRAL_RAW, NEUTRAL_RAW, NEUTRAL_RAW)


def invert_deadzone(u: float, cfg: ChainConfig) -> float:
    """Fore-aft level whose dead-zone output equals u (once the zone is active)."""
    if u == 0.0:
        return 0.0
    return math.copysign(cfg.t_exit + abs(u) * (1.0 - cfg.t_exit), u)


class GipPilot:
    """Pure-pursuit pilot driving the continuous technique.

    Steers toward a lookahead point with curvature 2*sin(bearing error)/L and
    inverts the drive mapping into left/right wheel commands, scaling the
    command sum down before sacrificing the command difference when clamping.
    Heading errors beyond 90 degrees switch to a pivot until the target is
    back in front.
    """

    def __init__(self, scenario: Scenario, pc: PilotConfig, drive: DriveParams,
                 chain_cfg: ChainConfig):
        self.cursor = PathCursor(scenario.ref_path())
        self.pc = pc
        self.drive = drive
        self.chain_cfg = chain_cfg

    def command(self, pose: Pose) -> WheelCommand:
        pc = self.pc
        s, _ = self.cursor.update(pose.x, pose.y)
        tx, ty = self.cursor.lookahead(s, pc.lookahead_m)
        err = normalize_angle(math.atan2(ty - pose.y, tx - pose.x) - pose.theta)
        if abs(err) > math.pi / 2.0:
            return WheelCommand(-math.copysign(0.5, err), math.copysign(0.5, err))
        kappa = 2.0 * math.sin(err) / pc.lookahead_m
        u_sum = 2.0 * pc.cruise_frac
        u_diff = kappa * self.drive.track_w * pc.cruise_frac
        u_diff = min(max(u_diff, -2.0), 2.0)
        peak = (u_sum + abs(u_diff)) / 2.0
        if peak > 1.0:
            # shed speed, not curvature: scale the pair together
            u_sum /= peak
            u_diff /= peak
        clip = lambda u: min(max(u, -1.0), 1.0)  # noqa: E731  (ulp guard)
        return WheelCommand(clip((u_sum - u_diff) / 2.0), clip((u_sum + u_diff) / 2.0))

    def frame(self, pose: Pose, t_us: int, driving: bool) -> PressureFrame:
        if not driving:
            return neutral_frame(t_us)
        cmd = self.command(pose)
        return frame_from_fore_aft(
            invert_deadzone(cmd.u_l, self.chain_cfg),
            invert_deadzone(cmd.u_r, self.chain_cfg),
            t_us,
            self.chain_cfg.p_span,
        )


class WipPilot:
    """Greedy snap pilot: turn while the target bearing error exceeds the
    tolerance, otherwise step, alternating feet; one gesture pulse per
    gesture period.

    On a straight course section it aims at the section's end vertex, the way
    a person walks at a visible corner or goal; a rolling lookahead there
    would let every snap step swing the bearing across the tolerance band and
    degenerate into turn-step hunting.  On arcs it tracks a lookahead point
    along the curve.

    A snap turn is only taken when it reduces the bearing error by at least
    COMMIT_DEG; with the tolerance at exactly half the snap angle, a
    zero-margin trigger would re-land every turn on the opposite tolerance
    boundary and alternate step/turn indefinitely whenever the target bearing
    falls halfway between two reachable headings.
    """

    PULSE_S = 0.03
    COMMIT_DEG = 5.0

    def __init__(self, scenario: Scenario, pc: PilotConfig, wip_cfg, chain_cfg: ChainConfig):
        self.path = scenario.ref_path()
        self.cursor = PathCursor(self.path)
        self.pc = pc
        self.wip_cfg = wip_cfg
        self.chain_cfg = chain_cfg
        self.next_act_us: int | None = None
        self.pulse_zone: str | None = None
        self.pulse_until_us = 0
        self.last_step_foot: str | None = None

    def _decide(self, pose: Pose) -> str:
        from .paths import LineSeg

        s, _ = self.cursor.update(pose.x, pose.y)
        seg = self.path.segment_at(s)
        tx, ty = self.cursor.lookahead(s, self.pc.lookahead_m)
        if isinstance(seg, LineSeg):
            # aim at the leg's end vertex while it is comfortably ahead; the
            # rolling point takes over near the corner (it already lies on
            # the next leg there)
            rem = math.hypot(seg.x1 - pose.x, seg.y1 - pose.y)
            if rem > self.pc.lookahead_m:
                tx, ty = seg.x1, seg.y1
        err = normalize_angle(math.atan2(ty - pose.y, tx - pose.x) - pose.theta)
        if abs(err) > math.radians(self.pc.heading_tol_deg):
            snap = math.copysign(math.radians(self.wip_cfg.snap_turn_deg), err)
            gain = abs(err) - abs(normalize_angle(err - snap))
            if gain > math.radians(self.COMMIT_DEG):
                return "lr" if err > 0 else "rr"
        foot = "r" if self.last_step_foot == "l" else "l"
        self.last_step_foot = foot
        return foot + "f"

    def frame(self, pose: Pose, t_us: int, driving: bool) -> PressureFrame:
        if not driving:
            self.next_act_us = None
            return neutral_frame(t_us)
        period_us = max(self.pc.gesture_period_s, self.wip_cfg.t_refract_s) * 1e6
        if self.next_act_us is None:
            self.next_act_us = t_us
        if t_us >= self.next_act_us:
            self.pulse_zone = self._decide(pose)
            self.pulse_until_us = t_us + round(self.PULSE_S * 1e6)
            self.next_act_us = t_us + round(period_us)
        if self.pulse_zone is not None and t_us < self.pulse_until_us:
            amp = 2.0 * self.wip_cfg.theta_step * self.chain_cfg.p_span
            ch = {"lf": NEUTRAL_RAW, "lr": NEUTRAL_RAW, "rf": NEUTRAL_RAW, "rr": NEUTRAL_RAW}
            ch[self.pulse_zone] = _clamp_raw(NEUTRAL_RAW + amp)
            return PressureFrame(t_us, ch["lf"], ch["lr"], ch["rf"], ch["rr"])
        self.pulse_zone = None
        return neutral_frame(t_us)


def make_pilot(technique: str, scenario: Scenario, pc: PilotConfig,
               drive: DriveParams, wip_cfg, chain_cfg: ChainConfig):
    if technique == "gip":
        return GipPilot(scenario, pc, drive, chain_cfg)
    if technique == "wip":
        return WipPilot(scenario, pc, wip_cfg, chain_cfg)
    raise ValueError(f"unknown technique {technique!r}")
