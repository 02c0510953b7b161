"""Calibration and the per-foot filter chain turning raw frames into wheel inputs.

The chain realizes the raw-pressure-to-command map as a stateful pipeline per
foot: baseline-subtracted fore-aft normalization, a hysteretic dead-zone, an
exponential smoother with a rate-independent coefficient, and a minimum-hold
debounce.  A neutral watchdog re-estimates the baseline when both feet stay
near neutral for a sustained interval, absorbing slow sensor drift.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass
from typing import NamedTuple, Sequence

from .frames import PressureFrame


class CalibrationError(ValueError):
    pass


class WindowTooShort(CalibrationError):
    pass


class UserNotStill(CalibrationError):
    pass


class NotCalibrated(RuntimeError):
    pass


class ForeAftSample(NamedTuple):
    """Normalized fore-aft pressure differential per foot, + = forward."""

    s_l: float
    s_r: float


class WheelCommand(NamedTuple):
    """Filtered normalized wheel inputs, both in [-1, 1]."""

    u_l: float
    u_r: float


@dataclass(frozen=True)
class ChainConfig:
    """Tunable parameters of the filter chain.

    p_span is the raw fore-aft differential mapped to full scale; t_enter and
    t_exit are the dead-zone hysteresis thresholds on |s|; tau_s the smoothing
    time constant; t_hold_s the debounce minimum hold.  eps_neutral bounds the
    neutral band watched for t_neutral_s before the baseline is re-estimated
    from the trailing calib_window_s of raw frames; calib_var_max is the
    per-channel variance ceiling for accepting a calibration window.
    """

    p_span: float = 600.0
    t_enter: float = 0.12
    t_exit: float = 0.06
    tau_s: float = 0.08
    t_hold_s: float = 0.05
    eps_neutral: float = 0.05
    t_neutral_s: float = 3.0
    calib_window_s: float = 1.0
    calib_var_max: float = 400.0

    def __post_init__(self):
        if not 0.0 <= self.t_exit < self.t_enter < 1.0:
            raise ValueError(
                f"need 0 <= t_exit < t_enter < 1, got {self.t_exit}, {self.t_enter}"
            )
        if not self.eps_neutral < self.t_enter:
            raise ValueError("eps_neutral must be < t_enter")
        for name in ("p_span", "tau_s", "t_neutral_s", "calib_window_s", "calib_var_max"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be > 0")
        if self.t_hold_s < 0:
            raise ValueError("t_hold_s must be >= 0")


@dataclass(frozen=True)
class Baseline:
    """Per-channel neutral offsets in raw units."""

    b_lf: float
    b_lr: float
    b_rf: float
    b_rr: float
    captured_at: int = 0

    def __post_init__(self):
        for name in ("b_lf", "b_lr", "b_rf", "b_rr"):
            v = getattr(self, name)
            if not 0.0 <= v <= 4095.0:
                raise ValueError(f"{name}={v} outside raw range")


def _window_duration_s(frames: Sequence[PressureFrame]) -> float:
    # Span between first and last stamp plus one mean inter-frame gap, so a
    # "1 s of frames at 100 Hz" capture (stamps 0..990000) counts as 1.0 s.
    n = len(frames)
    if n < 2:
        return 0.0
    return (frames[-1].timestamp_us - frames[0].timestamp_us) * n / (n - 1) / 1e6


def _channel_means(frames: Sequence[PressureFrame]) -> tuple[float, float, float, float]:
    n = len(frames)
    sums = [0, 0, 0, 0]
    for f in frames:
        for i, v in enumerate(f.channels()):
            sums[i] += v
    return tuple(s / n for s in sums)  # type: ignore[return-value]


def estimate_baseline(
    frames: Sequence[PressureFrame], cfg: ChainConfig
) -> Baseline:
    """Estimate per-channel neutral offsets from a still capture.

    Uses the trailing calib_window_s worth of frames; each channel's offset is
    the arithmetic mean over that window.  Rejects the window when any channel
    variance exceeds calib_var_max (the user was not still).
    """
    frames = list(frames)
    if _window_duration_s(frames) < cfg.calib_window_s:
        raise WindowTooShort(
            f"have {_window_duration_s(frames):.3f} s, need {cfg.calib_window_s} s"
        )
    lo = 0
    for i in range(len(frames) - 1, -1, -1):
        if _window_duration_s(frames[i:]) >= cfg.calib_window_s:
            lo = i
            break
    window = frames[lo:]
    means = _channel_means(window)
    n = len(window)
    for i, name in enumerate(("lf", "lr", "rf", "rr")):
        var = sum((f.channels()[i] - means[i]) ** 2 for f in window) / n
        if var > cfg.calib_var_max:
            raise UserNotStill(f"{name} variance {var:.1f} > {cfg.calib_var_max}")
    return Baseline(*means, captured_at=window[-1].timestamp_us)


def _clamp(x: float, lo: float, hi: float) -> float:
    return lo if x < lo else hi if x > hi else x


def fore_aft(frame: PressureFrame, base: Baseline, cfg: ChainConfig) -> ForeAftSample:
    """Baseline-subtracted fore-minus-rear differential, normalized by p_span."""
    s_l = ((frame.lf - base.b_lf) - (frame.lr - base.b_lr)) / cfg.p_span
    s_r = ((frame.rf - base.b_rf) - (frame.rr - base.b_rr)) / cfg.p_span
    return ForeAftSample(_clamp(s_l, -1.0, 1.0), _clamp(s_r, -1.0, 1.0))


class Deadzone:
    """Hysteretic dead-zone on |s|: enters at t_enter, releases at t_exit.

    While active the band [0, t_exit] is cut out and the remainder rescaled to
    full range, so output is continuous and strictly increasing on (t_exit, 1].
    """

    def __init__(self, t_enter: float, t_exit: float):
        self.t_enter = t_enter
        self.t_exit = t_exit
        self.active = False

    def step(self, s: float) -> float:
        mag = abs(s)
        if self.active:
            if mag <= self.t_exit:
                self.active = False
        elif mag >= self.t_enter:
            self.active = True
        if not self.active:
            return 0.0
        return math.copysign((mag - self.t_exit) / (1.0 - self.t_exit), s)


class Smoother:
    """First-order exponential smoother with dt-derived coefficient.

    alpha = 1 - exp(-dt/tau) each step, so the response is independent of the
    incoming frame rate.
    """

    def __init__(self, tau_s: float):
        self.tau_s = tau_s
        self.y = 0.0

    def step(self, x: float, dt_s: float) -> float:
        alpha = 1.0 - math.exp(-dt_s / self.tau_s)
        self.y += alpha * (x - self.y)
        return self.y


class MinHold:
    """Minimum-hold debounce: block output until the input has kept one sign
    continuously for t_hold_s; a zero or a sign flip restarts the clock."""

    def __init__(self, t_hold_s: float):
        self.hold_us = t_hold_s * 1e6
        self.onset_us: int | None = None
        self.sign = 0

    def step(self, x: float, t_us: int) -> float:
        if x == 0.0:
            self.onset_us = None
            self.sign = 0
            return 0.0
        sign = 1 if x > 0 else -1
        if self.onset_us is None or sign != self.sign:
            self.onset_us = t_us
            self.sign = sign
        if t_us - self.onset_us >= self.hold_us:
            return x
        return 0.0


class NeutralWatchdog:
    """Re-baselining trigger: both feet inside the eps_neutral band for
    t_neutral_s emits a fresh baseline from the trailing raw window."""

    def __init__(self, cfg: ChainConfig):
        self.cfg = cfg
        self.neutral_since_us: int | None = None
        self.buffer: deque[PressureFrame] = deque()

    def step(self, sample: ForeAftSample, frame: PressureFrame) -> Baseline | None:
        cfg = self.cfg
        self.buffer.append(frame)
        horizon = (cfg.calib_window_s + 0.5) * 1e6
        while self.buffer and frame.timestamp_us - self.buffer[0].timestamp_us > horizon:
            self.buffer.popleft()
        if abs(sample.s_l) < cfg.eps_neutral and abs(sample.s_r) < cfg.eps_neutral:
            if self.neutral_since_us is None:
                self.neutral_since_us = frame.timestamp_us
            elif frame.timestamp_us - self.neutral_since_us >= cfg.t_neutral_s * 1e6:
                window = list(self.buffer)
                if _window_duration_s(window) >= cfg.calib_window_s:
                    lo = 0
                    for i in range(len(window) - 1, -1, -1):
                        if _window_duration_s(window[i:]) >= cfg.calib_window_s:
                            lo = i
                            break
                    means = _channel_means(window[lo:])
                    self.neutral_since_us = frame.timestamp_us
                    return Baseline(*means, captured_at=frame.timestamp_us)
        else:
            self.neutral_since_us = None
        return None


class SignalChain:
    """The full stateful map from raw frames to wheel commands.

    Per foot: fore-aft normalization, dead-zone, smoothing (dt from
    consecutive frame timestamps), debounce, clamp to [-1, 1].  Shared: the
    neutral watchdog that swaps in re-estimated baselines.
    """

    def __init__(self, cfg: ChainConfig, baseline: Baseline | None = None):
        self.cfg = cfg
        self.baseline = baseline
        self._build_stages()
        self.watchdog = NeutralWatchdog(cfg)
        self.last_t_us: int | None = None

    def _build_stages(self):
        cfg = self.cfg
        self.dz_l = Deadzone(cfg.t_enter, cfg.t_exit)
        self.dz_r = Deadzone(cfg.t_enter, cfg.t_exit)
        self.sm_l = Smoother(cfg.tau_s)
        self.sm_r = Smoother(cfg.tau_s)
        self.hold_l = MinHold(cfg.t_hold_s)
        self.hold_r = MinHold(cfg.t_hold_s)

    @property
    def calibrated(self) -> bool:
        return self.baseline is not None

    def set_baseline(self, baseline: Baseline) -> None:
        self.baseline = baseline

    def set_config(self, cfg: ChainConfig) -> None:
        """Swap parameters live, preserving filter state."""
        self.cfg = cfg
        for dz in (self.dz_l, self.dz_r):
            dz.t_enter, dz.t_exit = cfg.t_enter, cfg.t_exit
        for sm in (self.sm_l, self.sm_r):
            sm.tau_s = cfg.tau_s
        for hold in (self.hold_l, self.hold_r):
            hold.hold_us = cfg.t_hold_s * 1e6
        self.watchdog.cfg = cfg

    def step(self, frame: PressureFrame) -> WheelCommand:
        if self.baseline is None:
            raise NotCalibrated("no baseline; calibrate first")
        t = frame.timestamp_us
        dt_s = 0.0 if self.last_t_us is None else (t - self.last_t_us) / 1e6
        self.last_t_us = t
        sample = fore_aft(frame, self.baseline, self.cfg)
        u_l = self.hold_l.step(self.sm_l.step(self.dz_l.step(sample.s_l), dt_s), t)
        u_r = self.hold_r.step(self.sm_r.step(self.dz_r.step(sample.s_r), dt_s), t)
        new_base = self.watchdog.step(sample, frame)
        if new_base is not None:
            self.baseline = new_base
        return WheelCommand(_clamp(u_l, -1.0, 1.0), _clamp(u_r, -1.0, 1.0))
