"""Pressure frame data model, binary wire codec, replay files, synthetic streams.

A frame carries one timestamped sample of the four aggregated plantar-pressure
channels (left/right x fore/rear) as raw 12-bit counts.  The wire format is a
fixed 22-byte record:

    offset  size  field
    0       2     magic 0x47 0x50 ("GP")
    2       1     version 0x01
    3       1     flags 0x00 (reserved)
    4       8     timestamp_us, little-endian unsigned
    12      8     lf, lr, rf, rr, each 2-byte little-endian unsigned
    20      2     CRC-16/CCITT-FALSE over bytes 0..19, big-endian

Example:
    >>> f = PressureFrame(0, 0, 0, 0, 0)
    >>> encode_frame(f).hex(" ")
    '47 50 01 00 00 00 00 00 00 00 00 00 00 00 00 00 00 00 00 00 c2 d4'
    >>> decode_frame(encode_frame(f)) == f
    True
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from typing import IO, Iterable, Sequence

FRAME_MAGIC = b"\x47\x50"
FRAME_VERSION = 0x01
FRAME_SIZE = 22
CHANNEL_MAX = 4095  # 12-bit raw counts

_HEADER = struct.Struct("<2sBB")
_PAYLOAD = struct.Struct("<Q4H")


class FrameError(ValueError):
    """Base class for codec and replay failures."""


class Truncated(FrameError):
    pass


class BadMagic(FrameError):
    pass


class BadVersion(FrameError):
    pass


class BadCrc(FrameError):
    pass


class ChannelOutOfRange(FrameError):
    def __init__(self, msg: str, line_no: int | None = None):
        super().__init__(msg if line_no is None else f"line {line_no}: {msg}")
        self.line_no = line_no


class ReplayError(FrameError):
    """Replay file failure, annotated with the 1-based offending line."""

    def __init__(self, msg: str, line_no: int):
        super().__init__(f"line {line_no}: {msg}")
        self.line_no = line_no


class ParseError(ReplayError):
    pass


class NonMonotonicTimestamp(ReplayError):
    pass


class EmptyScript(ValueError):
    pass


@dataclass(frozen=True)
class PressureFrame:
    """One sample of the four aggregated channels.

    Channels are raw unsigned counts in [0, 4095]; timestamps are microseconds
    since stream start and must be strictly increasing within a stream.
    """

    timestamp_us: int
    lf: int
    lr: int
    rf: int
    rr: int

    def __post_init__(self):
        if self.timestamp_us < 0:
            raise FrameError(f"negative timestamp {self.timestamp_us}")
        for name in ("lf", "lr", "rf", "rr"):
            v = getattr(self, name)
            if not 0 <= v <= CHANNEL_MAX:
                raise ChannelOutOfRange(f"{name}={v} outside [0, {CHANNEL_MAX}]")

    def channels(self) -> tuple[int, int, int, int]:
        return (self.lf, self.lr, self.rf, self.rr)


# CRC-16/CCITT-FALSE: poly 0x1021, init 0xFFFF, no reflection, no xor-out.
def _make_crc_table() -> list[int]:
    table = []
    for i in range(256):
        c = i << 8
        for _ in range(8):
            c = ((c << 1) ^ 0x1021) & 0xFFFF if c & 0x8000 else (c << 1) & 0xFFFF
        table.append(c)
    return table


_CRC_TABLE = _make_crc_table()


def crc16_ccitt_false(data: bytes) -> int:
    """CRC-16/CCITT-FALSE of a byte sequence (check("123456789") == 0x29B1)."""
    crc = 0xFFFF
    for byte in data:
        crc = ((crc << 8) & 0xFFFF) ^ _CRC_TABLE[((crc >> 8) ^ byte) & 0xFF]
    return crc


def encode_frame(frame: PressureFrame) -> bytes:
    """Encode a frame into its 22-byte wire record."""
    body = _HEADER.pack(FRAME_MAGIC, FRAME_VERSION, 0x00) + _PAYLOAD.pack(
        frame.timestamp_us, frame.lf, frame.lr, frame.rf, frame.rr
    )
    return body + struct.pack(">H", crc16_ccitt_false(body))


def decode_frame(buf: bytes) -> PressureFrame:
    """Decode the first 22 bytes of ``buf`` into a frame.

    Raises Truncated, BadMagic, BadVersion, BadCrc or ChannelOutOfRange; a
    corrupted record never decodes into a silently wrong frame.
    """
    if len(buf) < FRAME_SIZE:
        raise Truncated(f"need {FRAME_SIZE} bytes, got {len(buf)}")
    record = bytes(buf[:FRAME_SIZE])
    if record[0:2] != FRAME_MAGIC:
        raise BadMagic(f"magic {record[0:2].hex()} != {FRAME_MAGIC.hex()}")
    if record[2] != FRAME_VERSION:
        raise BadVersion(f"version {record[2]} != {FRAME_VERSION}")
    (crc_rx,) = struct.unpack_from(">H", record, 20)
    crc = crc16_ccitt_false(record[:20])
    if crc_rx != crc:
        raise BadCrc(f"crc 0x{crc_rx:04X} != computed 0x{crc:04X}")
    t_us, lf, lr, rf, rr = _PAYLOAD.unpack_from(record, 4)
    return PressureFrame(t_us, lf, lr, rf, rr)


def read_replay(stream: IO[str] | Iterable[str]) -> list[PressureFrame]:
    """Parse a replay stream of ``timestamp_us,lf,lr,rf,rr`` lines.

    ``#``-prefixed lines are comments; blank lines are ignored.  Timestamps
    must be strictly increasing.
    """
    frames: list[PressureFrame] = []
    last_t = -1
    for line_no, raw in enumerate(stream, start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split(",")
        if len(parts) != 5:
            raise ParseError(f"expected 5 fields, got {len(parts)}", line_no)
        try:
            values = [int(p) for p in parts]
        except ValueError:
            raise ParseError(f"non-integer field in {line!r}", line_no) from None
        t_us = values[0]
        if t_us <= last_t:
            raise NonMonotonicTimestamp(
                f"timestamp {t_us} not greater than previous {last_t}", line_no
            )
        try:
            frame = PressureFrame(t_us, *values[1:])
        except ChannelOutOfRange as exc:
            raise ChannelOutOfRange(str(exc), line_no) from None
        except FrameError as exc:
            raise ParseError(str(exc), line_no) from None
        frames.append(frame)
        last_t = t_us
    return frames


def write_replay(frames: Iterable[PressureFrame], stream: IO[str]) -> None:
    """Write frames in the replay CSV format (LF line endings)."""
    for f in frames:
        stream.write(f"{f.timestamp_us},{f.lf},{f.lr},{f.rf},{f.rr}\n")


@dataclass(frozen=True)
class ScriptSegment:
    """One piece of a synthetic pressure script.

    ``ramp=False`` holds the four targets for the whole duration; ``ramp=True``
    interpolates linearly from the previous segment's targets (zero for the
    first segment) to this segment's targets.
    """

    duration_s: float
    lf: int
    lr: int
    rf: int
    rr: int
    ramp: bool = False

    def __post_init__(self):
        if self.duration_s <= 0:
            raise ValueError(f"segment duration {self.duration_s} must be > 0")
        for name in ("lf", "lr", "rf", "rr"):
            v = getattr(self, name)
            if not 0 <= v <= CHANNEL_MAX:
                raise ChannelOutOfRange(f"{name}={v} outside [0, {CHANNEL_MAX}]")

    def targets(self) -> tuple[int, int, int, int]:
        return (self.lf, self.lr, self.rf, self.rr)


@dataclass(frozen=True)
class PressureScript:
    segments: tuple[ScriptSegment, ...]

    def __post_init__(self):
        if not self.segments:
            raise EmptyScript("script has no segments")

    @property
    def duration_s(self) -> float:
        return sum(s.duration_s for s in self.segments)


def synth_stream(script: PressureScript, rate_hz: float) -> list[PressureFrame]:
    """Generate a uniformly spaced frame stream from a script.

    Produces exactly floor(total_duration * rate_hz) frames; frame k is
    stamped round(k * 1e6 / rate_hz) microseconds.
    """
    if not 1.0 <= rate_hz <= 1e6:
        raise ValueError(f"rate_hz {rate_hz} outside [1, 1e6]")
    segs = script.segments
    starts = [0.0]
    for seg in segs:
        starts.append(starts[-1] + seg.duration_s)
    total = starts[-1]
    n = int(total * rate_hz + 1e-9)
    frames: list[PressureFrame] = []
    idx = 0
    for k in range(n):
        t = k / rate_hz
        while idx + 1 < len(segs) and t >= starts[idx + 1]:
            idx += 1
        seg = segs[idx]
        if seg.ramp:
            prev = segs[idx - 1].targets() if idx > 0 else (0, 0, 0, 0)
            u = (t - starts[idx]) / seg.duration_s
            ch = tuple(round(p + u * (q - p)) for p, q in zip(prev, seg.targets()))
        else:
            ch = seg.targets()
        frames.append(PressureFrame(round(k * 1e6 / rate_hz), *ch))
    return frames
