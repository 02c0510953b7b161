"""Locomotion techniques over the shared pressure-frame stream.

Two implementations behind one interface: the continuous glide technique
(filter chain feeding the differential-drive mapping) and a seated
walking-in-place baseline that fires discrete snap steps and snap turns on
plantar-pressure transients.  Both consume the same frame stream and produce a
pose per frame.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import NamedTuple, Optional

from .chain import (
    Baseline,
    ChainConfig,
    NotCalibrated,
    SignalChain,
    WheelCommand,
)
from .frames import PressureFrame
from .kinematics import (
    DriveParams,
    Pose,
    Twist,
    integrate,
    normalize_angle,
    twist_from_wheels,
    wheel_speeds,
)


class TechniqueEvent(Enum):
    STEP_FORWARD = "step_forward"
    TURN_LEFT = "turn_left"
    TURN_RIGHT = "turn_right"


@dataclass(frozen=True)
class WipConfig:
    """Snap-locomotion parameters for the walking-in-place baseline.

    theta_step is the normalized zone-pressure level whose rising edge fires
    an event; t_refract_s suppresses retriggering after any event.
    """

    snap_distance: float = 1.0
    snap_turn_deg: float = 30.0
    theta_step: float = 0.25
    t_refract_s: float = 0.30

    def __post_init__(self):
        if self.snap_distance <= 0:
            raise ValueError("snap_distance must be > 0")
        if not 0.0 < self.snap_turn_deg <= 180.0:
            raise ValueError("snap_turn_deg must be in (0, 180]")
        if self.theta_step <= 0:
            raise ValueError("theta_step must be > 0")
        if self.t_refract_s <= 0:
            raise ValueError("t_refract_s must be > 0")


class StepResult(NamedTuple):
    """Per-frame technique output: new pose plus the driving signals."""

    pose: Pose
    twist: Twist
    command: WheelCommand
    event: Optional[TechniqueEvent]


def wip_apply(pose: Pose, ev: TechniqueEvent, cfg: WipConfig) -> Pose:
    """Apply one snap event: instant translate along heading, or instant turn."""
    if ev is TechniqueEvent.STEP_FORWARD:
        return Pose(
            pose.x + cfg.snap_distance * math.cos(pose.theta),
            pose.y + cfg.snap_distance * math.sin(pose.theta),
            pose.theta,
        )
    turn = math.radians(cfg.snap_turn_deg)
    if ev is TechniqueEvent.TURN_RIGHT:
        turn = -turn
    return Pose(pose.x, pose.y, normalize_angle(pose.theta + turn))


class GipTechnique:
    """Continuous technique: filter chain -> wheel speeds -> twist -> exact arc."""

    def __init__(
        self,
        chain_cfg: ChainConfig,
        drive: DriveParams,
        baseline: Baseline | None = None,
        pose: Pose = Pose(),
    ):
        self.chain = SignalChain(chain_cfg, baseline)
        self.drive = drive
        self.pose = pose

    @property
    def calibrated(self) -> bool:
        return self.chain.calibrated

    def set_baseline(self, baseline: Baseline) -> None:
        self.chain.set_baseline(baseline)

    def feed(self, frame: PressureFrame, dt_s: float) -> StepResult:
        cmd = self.chain.step(frame)
        tw = twist_from_wheels(*wheel_speeds(cmd, self.drive), self.drive)
        if dt_s > 0:
            self.pose = integrate(self.pose, tw, dt_s, self.drive)
        return StepResult(self.pose, tw, cmd, None)


class _EdgeDetector:
    """Rising-edge detector on one normalized pressure zone."""

    def __init__(self, threshold: float):
        self.threshold = threshold
        self.prev: float | None = None

    def step(self, value: float) -> bool:
        fired = self.prev is not None and self.prev < self.threshold <= value
        self.prev = value
        return fired


_ZONES = ("lf", "rf", "lr", "rr")  # detection priority: steps before turns


class WipTechnique:
    """Seated walking-in-place baseline triggered on pressure transients.

    Forefoot rising edges produce snap steps (feet must alternate); rearfoot
    rising edges produce snap turns toward that foot's side.  A shared
    refractory window suppresses retriggering; normalization reuses the same
    baseline/p_span convention as the filter chain but skips its level
    filtering, since snap triggering needs edges, not levels.
    """

    def __init__(
        self,
        wip_cfg: WipConfig,
        chain_cfg: ChainConfig,
        baseline: Baseline | None = None,
        pose: Pose = Pose(),
    ):
        self.cfg = wip_cfg
        self.chain_cfg = chain_cfg
        self.baseline = baseline
        self.pose = pose
        self._detectors = {z: _EdgeDetector(wip_cfg.theta_step) for z in _ZONES}
        self.last_event_us: int | None = None
        self.last_step_foot: str | None = None

    @property
    def calibrated(self) -> bool:
        return self.baseline is not None

    def set_baseline(self, baseline: Baseline) -> None:
        self.baseline = baseline

    def set_config(self, wip_cfg: WipConfig) -> None:
        self.cfg = wip_cfg
        for det in self._detectors.values():
            det.threshold = wip_cfg.theta_step

    def detect(self, frame: PressureFrame) -> Optional[TechniqueEvent]:
        """Run the edge detectors on one frame and emit at most one event."""
        if self.baseline is None:
            raise NotCalibrated("no baseline; calibrate first")
        base = self.baseline
        span = self.chain_cfg.p_span
        norm = {
            "lf": (frame.lf - base.b_lf) / span,
            "lr": (frame.lr - base.b_lr) / span,
            "rf": (frame.rf - base.b_rf) / span,
            "rr": (frame.rr - base.b_rr) / span,
        }
        edges = {z: self._detectors[z].step(norm[z]) for z in _ZONES}
        t = frame.timestamp_us
        refractory = (
            self.last_event_us is not None
            and t - self.last_event_us < self.cfg.t_refract_s * 1e6
        )
        if refractory:
            return None
        for zone in _ZONES:
            if not edges[zone]:
                continue
            foot = zone[0]
            if zone.endswith("f"):
                if self.last_step_foot == foot:
                    continue  # same-foot repeat; alternation rule ignores it
                self.last_step_foot = foot
                self.last_event_us = t
                return TechniqueEvent.STEP_FORWARD
            self.last_event_us = t
            return (
                TechniqueEvent.TURN_LEFT if foot == "l" else TechniqueEvent.TURN_RIGHT
            )
        return None

    def feed(self, frame: PressureFrame, dt_s: float) -> StepResult:
        ev = self.detect(frame)
        if ev is not None:
            self.pose = wip_apply(self.pose, ev, self.cfg)
        return StepResult(self.pose, Twist(0.0, 0.0), WheelCommand(0.0, 0.0), ev)


def make_technique(
    name: str,
    chain_cfg: ChainConfig,
    drive: DriveParams,
    wip_cfg: WipConfig,
    baseline: Baseline | None = None,
    pose: Pose = Pose(),
):
    if name == "gip":
        return GipTechnique(chain_cfg, drive, baseline, pose)
    if name == "wip":
        return WipTechnique(wip_cfg, chain_cfg, baseline, pose)
    raise ValueError(f"unknown technique {name!r} (expected 'gip' or 'wip')")
