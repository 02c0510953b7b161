"""Deterministic closed-loop trials and technique comparisons.

A trial runs the scripted pilot against one technique at a fixed frame rate:
the pilot reads the avatar pose, synthesizes the next raw pressure frame, the
session processes it, and metrics accumulate until every waypoint has been
visited within the arrival radius or the timeout expires.  Everything is a
pure function of (scenario, configs, seed), so identical inputs give
bit-identical results.
"""

from __future__ import annotations

import math
import statistics
from dataclasses import asdict, dataclass
from typing import Callable

from .config import Configs
from .frames import PressureFrame
from .paths import PathCursor, Scenario, make_scenario
from .pilots import make_pilot
from .session import Session, TelemetryRecord


@dataclass(frozen=True)
class TrialResult:
    completion_s: float
    path_len_m: float
    mean_xte_m: float
    max_xte_m: float
    frames_processed: int
    completed: bool

    def as_dict(self) -> dict:
        return asdict(self)


def run_trial(
    scenario: Scenario,
    technique: str,
    configs: Configs | None = None,
    rate_hz: float = 100.0,
    seed: int = 0,
    trail_out: list | None = None,
    frame_log: list[PressureFrame] | None = None,
) -> TrialResult:
    """Run one closed-loop trial; returns the per-trial metrics.

    trail_out, when given, receives (t_us, x, y, theta) tuples; frame_log
    receives every synthesized pressure frame (replayable through the live
    service for an identical pose trace).
    """
    if rate_hz < 50:
        raise ValueError(f"rate_hz {rate_hz} below the 50 Hz floor")
    del seed  # scenario construction consumed it; the loop itself is seedless
    configs = configs if configs is not None else Configs.default()
    session = Session(technique, configs)
    session.load_scenario(scenario)
    session.control(f"calibrate {configs.chain.calib_window_s:g}")
    pilot = make_pilot(technique, scenario, configs.pilot,
                       configs.drive, configs.wip, configs.chain)
    xte_cursor = PathCursor(scenario.ref_path())

    waypoints = scenario.waypoints
    wp_idx = 0
    prev_x, prev_y = scenario.start.x, scenario.start.y
    path_len = 0.0
    xte_sum = 0.0
    xte_max = 0.0
    completed = False
    elapsed_s = 0.0
    k = 0
    timeout_s = configs.pilot.timeout_s
    while True:
        t_us = round(k * 1e6 / rate_hz)
        elapsed_s = t_us / 1e6
        if elapsed_s > timeout_s:
            break
        driving = session.calibrated and wp_idx < len(waypoints)
        frame = pilot.frame(session.pose, t_us, driving)
        if frame_log is not None:
            frame_log.append(frame)
        rec = session.process(frame)
        if trail_out is not None:
            trail_out.append((rec.t_us, rec.x, rec.y, rec.theta))
        path_len += math.hypot(rec.x - prev_x, rec.y - prev_y)
        prev_x, prev_y = rec.x, rec.y
        _, xte = xte_cursor.update(rec.x, rec.y)
        xte_sum += xte
        xte_max = max(xte_max, xte)
        while wp_idx < len(waypoints) and math.hypot(
            rec.x - waypoints[wp_idx][0], rec.y - waypoints[wp_idx][1]
        ) <= scenario.arrival_radius:
            wp_idx += 1
        if wp_idx == len(waypoints):
            completed = True
            break
        k += 1
    frames = session.frames_processed
    return TrialResult(
        completion_s=elapsed_s,
        path_len_m=path_len,
        mean_xte_m=xte_sum / frames if frames else 0.0,
        max_xte_m=xte_max,
        frames_processed=frames,
        completed=completed,
    )


def run_trial_traced(
    scenario: Scenario,
    technique: str,
    configs: Configs | None = None,
    rate_hz: float = 100.0,
    seed: int = 0,
) -> tuple[TrialResult, list[tuple[int, float, float, float]], list[PressureFrame]]:
    """run_trial plus the pose trail and the synthesized frame stream."""
    trail: list[tuple[int, float, float, float]] = []
    frames: list[PressureFrame] = []
    result = run_trial(scenario, technique, configs, rate_hz, seed,
                       trail_out=trail, frame_log=frames)
    return result, trail, frames


_METRICS = ("completion_s", "path_len_m", "mean_xte_m", "max_xte_m")


def compare(
    task: str,
    techniques: tuple[str, ...] = ("gip", "wip"),
    reps: int = 10,
    seed: int = 0,
    configs: Configs | None = None,
    rate_hz: float = 100.0,
    scenario_factory: Callable[[int], Scenario] | None = None,
    on_trial: Callable[[str, str, int, TrialResult], None] | None = None,
) -> dict:
    """Run matched trials (same scenario per rep for every technique) and
    aggregate per-technique mean/SD of the trial metrics."""
    if reps < 1:
        raise ValueError("reps must be >= 1")
    configs = configs if configs is not None else Configs.default()
    factory = scenario_factory or (
        lambda s: make_scenario(task, s, track_w=configs.drive.track_w)
    )
    results: dict[str, list[TrialResult]] = {t: [] for t in techniques}
    for rep in range(reps):
        scenario = factory(seed + rep)
        for tech in techniques:
            res = run_trial(scenario, tech, configs, rate_hz, seed + rep)
            results[tech].append(res)
            if on_trial is not None:
                on_trial(scenario.name, tech, seed + rep, res)
    table: dict = {"task": task, "reps": reps, "seed": seed, "techniques": {}}
    for tech, rs in results.items():
        agg: dict = {"completed": sum(r.completed for r in rs)}
        for m in _METRICS:
            vals = [getattr(r, m) for r in rs]
            agg[m] = {
                "mean": statistics.fmean(vals),
                "sd": statistics.stdev(vals) if len(vals) > 1 else 0.0,
            }
        table["techniques"][tech] = agg
    return table
