"""Task geometries and reference-path utilities for the scenario harness.

Three course builders mirror the evaluation tasks: an open-space arrival in a
large square world, a zig-zag polyline with alternating heading changes, and a
tangent-continuous chain of circular arcs with alternating turn direction.
Reference paths are densified into polylines for cross-track-error metrics and
lookahead queries; a cursor tracks monotone progress along the path.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .kinematics import Pose


class InvalidGeometry(ValueError):
    pass


@dataclass(frozen=True)
class LineSeg:
    x0: float
    y0: float
    x1: float
    y1: float

    @property
    def length(self) -> float:
        return math.hypot(self.x1 - self.x0, self.y1 - self.y0)

    def point_at(self, s: float) -> tuple[float, float]:
        u = s / self.length
        return (self.x0 + u * (self.x1 - self.x0), self.y0 + u * (self.y1 - self.y0))

    def heading_at(self, s: float) -> float:
        return math.atan2(self.y1 - self.y0, self.x1 - self.x0)


@dataclass(frozen=True)
class ArcSeg:
    """Circular arc; sweep_rad is signed, positive for a left (CCW) turn."""

    cx: float
    cy: float
    radius: float
    angle0: float
    sweep_rad: float

    @property
    def length(self) -> float:
        return self.radius * abs(self.sweep_rad)

    def point_at(self, s: float) -> tuple[float, float]:
        phi = self.angle0 + self.sweep_rad * (s / self.length)
        return (self.cx + self.radius * math.cos(phi),
                self.cy + self.radius * math.sin(phi))

    def heading_at(self, s: float) -> float:
        phi = self.angle0 + self.sweep_rad * (s / self.length)
        return phi + math.copysign(math.pi / 2.0, self.sweep_rad)


Segment = LineSeg | ArcSeg


@dataclass
class Scenario:
    """A course: reference segments, ordered target waypoints, start pose."""

    name: str
    segments: tuple[Segment, ...]
    waypoints: tuple[tuple[float, float], ...]
    start: Pose
    arrival_radius: float = 0.75
    bounds: float = 80.0
    _path: "ReferencePath | None" = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        if self.arrival_radius <= 0:
            raise InvalidGeometry("arrival_radius must be > 0")
        if not self.waypoints:
            raise InvalidGeometry("scenario needs at least one waypoint")

    @property
    def goal(self) -> tuple[float, float]:
        return self.waypoints[-1]

    @property
    def length(self) -> float:
        return sum(seg.length for seg in self.segments)

    def ref_path(self) -> "ReferencePath":
        if self._path is None:
            self._path = ReferencePath(self.segments)
        return self._path


class ReferencePath:
    """Densified polyline over a segment chain, with arclength queries."""

    def __init__(self, segments: Sequence[Segment], step_m: float = 0.05):
        self.segments = tuple(segments)
        pts: list[tuple[float, float]] = []
        for seg in segments:
            n = max(2, int(math.ceil(seg.length / step_m)) + 1)
            for i in range(n):
                p = seg.point_at(seg.length * i / (n - 1))
                if pts and math.hypot(p[0] - pts[-1][0], p[1] - pts[-1][1]) < 1e-12:
                    continue
                pts.append(p)
        self.points = np.asarray(pts, dtype=float)
        d = np.hypot(np.diff(self.points[:, 0]), np.diff(self.points[:, 1]))
        self.cum_s = np.concatenate(([0.0], np.cumsum(d)))
        self.length = float(self.cum_s[-1])
        ends: list[float] = []
        acc = 0.0
        for seg in self.segments:
            acc += seg.length
            ends.append(acc)
        self._seg_ends = ends

    def segment_at(self, s: float) -> Segment:
        """The analytic segment containing arclength s."""
        for end, seg in zip(self._seg_ends, self.segments):
            if s < end:
                return seg
        return self.segments[-1]

    def point_at(self, s: float) -> tuple[float, float]:
        s = min(max(s, 0.0), self.length)
        j = int(np.searchsorted(self.cum_s, s, side="right")) - 1
        j = min(j, len(self.points) - 2)
        span = self.cum_s[j + 1] - self.cum_s[j]
        u = 0.0 if span == 0 else (s - self.cum_s[j]) / span
        p0, p1 = self.points[j], self.points[j + 1]
        return (float(p0[0] + u * (p1[0] - p0[0])), float(p0[1] + u * (p1[1] - p0[1])))


class PathCursor:
    """Monotone nearest-point tracker along a reference path.

    Progress only moves forward (small backtrack allowed), so self-adjacent
    course sections cannot capture the cursor.
    """

    def __init__(self, path: ReferencePath, window_m: float = 15.0, back_m: float = 2.0):
        self.path = path
        step = max(path.length / max(len(path.points) - 1, 1), 1e-9)
        self._win = max(2, int(window_m / step))
        self._back = max(1, int(back_m / step))
        self.idx = 0

    def update(self, x: float, y: float) -> tuple[float, float]:
        """Advance to the nearest path point; returns (arclength, distance)."""
        pts = self.path.points
        i0 = max(0, self.idx - self._back)
        i1 = min(len(pts), self.idx + self._win)
        window = pts[i0:i1]
        d2 = (window[:, 0] - x) ** 2 + (window[:, 1] - y) ** 2
        j = i0 + int(np.argmin(d2))
        best_s, best_d = self.path.cum_s[j], math.sqrt(float(d2[j - i0]))
        for a in (j - 1, j):
            if a < 0 or a + 1 >= len(pts):
                continue
            ax, ay = pts[a]
            bx, by = pts[a + 1]
            vx, vy = bx - ax, by - ay
            den = vx * vx + vy * vy
            if den == 0:
                continue
            t = min(max(((x - ax) * vx + (y - ay) * vy) / den, 0.0), 1.0)
            px, py = ax + t * vx, ay + t * vy
            d = math.hypot(x - px, y - py)
            if d < best_d:
                best_d = d
                best_s = self.path.cum_s[a] + t * math.sqrt(den)
        self.idx = max(self.idx, j)
        return float(best_s), best_d

    def lookahead(self, s: float, dist: float) -> tuple[float, float]:
        return self.path.point_at(s + dist)


def make_open_space(
    seed: int,
    arrival_radius: float = 0.75,
    bounds: float = 80.0,
    min_dist: float = 100.0,
    max_dist: float = 140.0,
) -> Scenario:
    """Single pseudo-random goal 100-140 m away inside the square world.

    The start sits near a corner so the full distance band fits inside the
    half-extent; the straight start-goal line is the XTE reference only, the
    route itself is unconstrained.
    """
    rng = random.Random(seed)
    sx, sy = -0.875 * bounds, -0.875 * bounds
    while True:
        gx = rng.uniform(-bounds, bounds)
        gy = rng.uniform(-bounds, bounds)
        if min_dist <= math.hypot(gx - sx, gy - sy) <= max_dist:
            break
    return Scenario(
        name=f"open.{seed}",
        segments=(LineSeg(sx, sy, gx, gy),),
        waypoints=((gx, gy),),
        start=Pose(sx, sy, math.pi / 4.0),
        arrival_radius=arrival_radius,
        bounds=bounds,
    )


def make_zigzag(
    n_segments: int = 8,
    seg_len_m: float = 15.0,
    turn_deg: float = 60.0,
    arrival_radius: float = 0.75,
) -> Scenario:
    """Polyline whose heading alternates +-turn_deg at every vertex."""
    if n_segments < 2:
        raise InvalidGeometry(f"need >= 2 segments, got {n_segments}")
    if seg_len_m <= 0:
        raise InvalidGeometry("segment length must be > 0")
    if not 0.0 < turn_deg < 180.0:
        raise InvalidGeometry("turn_deg must be in (0, 180)")
    half = math.radians(turn_deg) / 2.0
    x, y = 0.0, 0.0
    verts = [(x, y)]
    headings = []
    for i in range(n_segments):
        h = half if i % 2 == 0 else -half
        headings.append(h)
        x += seg_len_m * math.cos(h)
        y += seg_len_m * math.sin(h)
        verts.append((x, y))
    segments = tuple(
        LineSeg(*verts[i], *verts[i + 1]) for i in range(n_segments)
    )
    extent = max(max(abs(vx), abs(vy)) for vx, vy in verts)
    return Scenario(
        name="zigzag",
        segments=segments,
        waypoints=tuple(verts[1:]),
        start=Pose(0.0, 0.0, headings[0]),
        arrival_radius=arrival_radius,
        bounds=max(extent + 10.0, 80.0),
    )


def make_arc_course(
    radii_m: Sequence[float] = (6.0, 4.0, 8.0, 5.0),
    sweep_deg: float = 120.0,
    arrival_radius: float = 0.75,
    track_w: float = 0.5,
) -> Scenario:
    """Tangent-continuous arc chain with alternating turn direction."""
    if not radii_m:
        raise InvalidGeometry("need at least one radius")
    if any(r <= 0.5 * track_w for r in radii_m):
        raise InvalidGeometry(f"radii {radii_m} must exceed half the track width")
    if not 0.0 < sweep_deg < 360.0:
        raise InvalidGeometry("sweep_deg must be in (0, 360)")
    sweep = math.radians(sweep_deg)
    x, y, theta = 0.0, 0.0, 0.0
    segments: list[Segment] = []
    waypoints: list[tuple[float, float]] = []
    extent = 0.0
    for i, r in enumerate(radii_m):
        sgn = 1.0 if i % 2 == 0 else -1.0
        cx = x - sgn * r * math.sin(theta)
        cy = y + sgn * r * math.cos(theta)
        angle0 = math.atan2(y - cy, x - cx)
        seg = ArcSeg(cx, cy, r, angle0, sgn * sweep)
        segments.append(seg)
        x, y = seg.point_at(seg.length)
        theta += sgn * sweep
        waypoints.append((x, y))
        extent = max(extent, abs(x), abs(y), abs(cx) + r, abs(cy) + r)
    return Scenario(
        name="arc",
        segments=tuple(segments),
        waypoints=tuple(waypoints),
        start=Pose(0.0, 0.0, 0.0),
        arrival_radius=arrival_radius,
        bounds=max(extent + 10.0, 80.0),
    )


def make_scenario(task: str, seed: int = 0, track_w: float = 0.5) -> Scenario:
    """Build one of the named tasks: open | zigzag | arc."""
    if task == "open":
        return make_open_space(seed)
    if task == "zigzag":
        return make_zigzag()
    if task == "arc":
        return make_arc_course(track_w=track_w)
    raise InvalidGeometry(f"unknown task {task!r} (expected open, zigzag or arc)")
