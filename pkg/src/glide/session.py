"""Session core: one technique state driven by a frame stream plus control lines.

The offline harness, the replay command and the live stream service all run
frames through this class, so transport can never change semantics.  Control
commands: ``calibrate [window_s]`` (baseline from the next window; the
response is deferred until the window completes), ``set <key> <value>`` (live
parameter update applied between frames), ``scenario <name> [seed]`` (loads a
reference-path overlay and re-homes the avatar to the course start), ``xte``,
``latency <n>``, ``stats`` and ``ping``.
"""

from __future__ import annotations

import dataclasses
import json
import time
from collections import deque
from dataclasses import dataclass
from statistics import quantiles

from .chain import UserNotStill, estimate_baseline
from .config import ConfigError, Configs, apply_setting
from .frames import PressureFrame
from .kinematics import Pose, Twist
from .paths import PathCursor, Scenario, make_scenario
from .techniques import make_technique


class ProtocolError(RuntimeError):
    pass


class ControlError(Exception):
    """Control command failure; str(exc) is the err-line token text."""


class NotEnoughData(ControlError):
    pass


@dataclass
class TelemetryRecord:
    t_us: int
    x: float
    y: float
    theta: float
    v: float
    omega: float
    u_l: float
    u_r: float
    calibrated: bool
    latency_us: int

    def to_json(self) -> str:
        return json.dumps(
            {
                "t_us": self.t_us,
                "pose": {"x": self.x, "y": self.y, "theta": self.theta},
                "twist": {"v": self.v, "omega": self.omega},
                "u_L": self.u_l,
                "u_R": self.u_r,
                "calibrated": self.calibrated,
                "latency_us": self.latency_us,
            },
            separators=(",", ":"),
        )


class Session:
    """Single-owner processing state for one frame stream."""

    def __init__(self, technique: str = "gip", configs: Configs | None = None,
                 history_len: int = 20000):
        self.configs = configs if configs is not None else Configs.default()
        self.technique_name = technique
        self.technique = make_technique(
            technique, self.configs.chain, self.configs.drive, self.configs.wip
        )
        self._calib_window: float | None = None
        self._calib_frames: list[PressureFrame] = []
        self._responses: deque[str] = deque()
        self.history: deque[TelemetryRecord] = deque(maxlen=history_len)
        self._last_t_us: int | None = None
        self.frames_processed = 0
        self.scenario: Scenario | None = None
        self._xte_cursor: PathCursor | None = None

    @property
    def pose(self) -> Pose:
        return self.technique.pose

    @property
    def calibrated(self) -> bool:
        return self.technique.calibrated

    def load_scenario(self, scenario: Scenario) -> None:
        """Attach a reference path and re-home the avatar to its start."""
        self.scenario = scenario
        self._xte_cursor = PathCursor(scenario.ref_path())
        self.technique.pose = scenario.start

    # -- frame path ----------------------------------------------------------

    def process(self, frame: PressureFrame) -> TelemetryRecord:
        t0 = time.perf_counter()
        t_us = frame.timestamp_us
        if self._last_t_us is not None and t_us <= self._last_t_us:
            raise ProtocolError(
                f"timestamp {t_us} not greater than previous {self._last_t_us}"
            )
        dt_s = 0.0 if self._last_t_us is None else (t_us - self._last_t_us) / 1e6
        self._last_t_us = t_us
        self._collect_calibration(frame)
        if self.technique.calibrated:
            out = self.technique.feed(frame, dt_s)
            pose, tw, cmd = out.pose, out.twist, out.command
        else:
            pose, tw, cmd = self.technique.pose, Twist(0.0, 0.0), (0.0, 0.0)
        rec = TelemetryRecord(
            t_us, pose.x, pose.y, pose.theta, tw[0], tw[1], cmd[0], cmd[1],
            self.technique.calibrated,
            int((time.perf_counter() - t0) * 1e6),
        )
        self.history.append(rec)
        self.frames_processed += 1
        return rec

    def _collect_calibration(self, frame: PressureFrame) -> None:
        if self._calib_window is None:
            return
        self._calib_frames.append(frame)
        f = self._calib_frames
        n = len(f)
        if n < 2:
            return
        duration = (f[-1].timestamp_us - f[0].timestamp_us) * n / (n - 1) / 1e6
        if duration < self._calib_window:
            return
        cfg = dataclasses.replace(self.configs.chain, calib_window_s=self._calib_window)
        window = self._calib_window
        self._calib_window = None
        self._calib_frames = []
        try:
            baseline = estimate_baseline(f, cfg)
        except UserNotStill:
            self._responses.append("err user-not-still")
            return
        self.technique.set_baseline(baseline)
        self._responses.append(
            f"ok calibrate window={window:g} "
            f"b={baseline.b_lf:g},{baseline.b_lr:g},{baseline.b_rf:g},{baseline.b_rr:g}"
        )

    def drain_responses(self) -> list[str]:
        out = list(self._responses)
        self._responses.clear()
        return out

    # -- control path --------------------------------------------------------

    def control(self, line: str) -> str | None:
        """Handle one control line; returns the response, or None when the
        response is deferred (calibrate) and will appear in drain_responses()."""
        parts = line.strip().split()
        if not parts:
            raise ControlError("unknown-command (empty line)")
        cmd, args = parts[0], parts[1:]
        if cmd == "ping":
            return "ok ping"
        if cmd == "calibrate":
            return self._cmd_calibrate(args)
        if cmd == "set":
            return self._cmd_set(args)
        if cmd == "scenario":
            return self._cmd_scenario(args)
        if cmd == "xte":
            return self._cmd_xte()
        if cmd == "latency":
            return self._cmd_latency(args)
        if cmd == "stats":
            return (
                f"ok stats frames={self.frames_processed} "
                f"calibrated={'true' if self.calibrated else 'false'} "
                f"technique={self.technique_name}"
            )
        raise ControlError(f"unknown-command {cmd}")

    def _cmd_calibrate(self, args: list[str]) -> None:
        window = self.configs.chain.calib_window_s
        if args:
            try:
                window = float(args[0])
            except ValueError:
                raise ControlError(f"bad-value {args[0]!r} is not a number") from None
        if window <= 0:
            raise ControlError("bad-value window must be > 0")
        self._calib_window = window
        self._calib_frames = []
        return None

    def _cmd_set(self, args: list[str]) -> str:
        if len(args) != 2:
            raise ControlError("bad-value usage: set <key> <value>")
        key, value = args
        try:
            self.configs = apply_setting(self.configs, key, value)
        except ConfigError as exc:
            raise ControlError(f"bad-value {exc}") from None
        tech = self.technique
        if hasattr(tech, "chain"):
            tech.chain.set_config(self.configs.chain)
            tech.drive = self.configs.drive
        else:
            tech.chain_cfg = self.configs.chain
            tech.set_config(self.configs.wip)
        return f"ok set {key} {value}"

    def _cmd_scenario(self, args: list[str]) -> str:
        if not args:
            raise ControlError("bad-value usage: scenario <name> [seed]")
        name = args[0]
        seed = 0
        if len(args) > 1:
            try:
                seed = int(args[1])
            except ValueError:
                raise ControlError(f"bad-value seed {args[1]!r}") from None
        try:
            scenario = make_scenario(name, seed, track_w=self.configs.drive.track_w)
        except ValueError as exc:
            raise ControlError(f"bad-value {exc}") from None
        self.load_scenario(scenario)
        pts = scenario.ref_path().points[:: max(1, len(scenario.ref_path().points) // 400)]
        overlay = {
            "name": scenario.name,
            "start": {"x": scenario.start.x, "y": scenario.start.y,
                      "theta": scenario.start.theta},
            "arrival_radius": scenario.arrival_radius,
            "waypoints": [[round(x, 3), round(y, 3)] for x, y in scenario.waypoints],
            "polyline": [[round(float(x), 3), round(float(y), 3)] for x, y in pts],
        }
        return "ok scenario " + json.dumps(overlay, separators=(",", ":"))

    def _cmd_xte(self) -> str:
        if self.scenario is None or self._xte_cursor is None:
            raise ControlError("bad-value no scenario loaded")
        pose = self.pose
        _, xte = self._xte_cursor.update(pose.x, pose.y)
        return f"ok xte {xte:.6f}"

    def _cmd_latency(self, args: list[str]) -> str:
        n = len(self.history)
        if args:
            try:
                n = int(args[0])
            except ValueError:
                raise ControlError(f"bad-value {args[0]!r} is not an integer") from None
        summary = self.measure_latency(n)
        return (
            f"ok latency n={n} p50={summary['p50_us']} "
            f"p95={summary['p95_us']} max={summary['max_us']}"
        )

    def measure_latency(self, n_frames: int) -> dict[str, int]:
        """p50/p95/max ingest-to-publish latency over the last n frames."""
        if n_frames < 1 or n_frames > len(self.history):
            raise NotEnoughData(
                f"not-enough-data have {len(self.history)} records, asked {n_frames}"
            )
        lat = sorted(r.latency_us for r in list(self.history)[-n_frames:])
        if len(lat) == 1:
            p50 = p95 = lat[0]
        else:
            cuts = quantiles(lat, n=100, method="inclusive")
            p50, p95 = cuts[49], cuts[94]
        return {"p50_us": int(p50), "p95_us": int(p95), "max_us": lat[-1]}
