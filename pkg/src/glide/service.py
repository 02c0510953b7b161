"""Live session service: binary frame ingest, control lines, telemetry fan-out.

Transports around the Session core:

* Ingest (TCP): back-to-back 22-byte frame records; lines starting with ``!``
  on the same connection are control commands and are answered in-line.  Each
  ingest connection owns an isolated session; the most recent one is the
  "active" session that drives the shared telemetry feeds.
* Telemetry (TCP): one JSON record per line from the active session, sampled
  at telemetry_rate_hz.
* WebSocket endpoints: ``/telemetry`` (same feed for browsers), ``/control``
  (command lines against the active session), and ``/ingest-b64`` (one
  base64-encoded 22-byte frame per message; ``!`` lines carry controls) which
  opens its own session.

A malformed frame or a non-monotonic timestamp closes only the offending
connection; other sessions keep streaming.
"""

from __future__ import annotations

import asyncio
import base64
import binascii
import logging
from dataclasses import dataclass, field

from .config import Configs
from .frames import FRAME_SIZE, FrameError, decode_frame
from .session import ControlError, ProtocolError, Session, TelemetryRecord

log = logging.getLogger("glide.service")


class BindFailure(OSError):
    pass


@dataclass(frozen=True)
class SessionConfig:
    """Service endpoints and the base technique/parameter setup.

    Port 0 binds an ephemeral port (reported after start); nonzero ports must
    be pairwise distinct.
    """

    host: str = "127.0.0.1"
    ingest_port: int = 47700
    telemetry_port: int = 47701
    ws_port: int = 47702
    technique: str = "gip"
    telemetry_rate_hz: float = 60.0
    configs: Configs = field(default_factory=Configs.default)

    def __post_init__(self):
        ports = [p for p in (self.ingest_port, self.telemetry_port, self.ws_port) if p]
        if len(set(ports)) != len(ports):
            raise ValueError("ingest, telemetry and ws ports must be distinct")
        if self.telemetry_rate_hz <= 0:
            raise ValueError("telemetry_rate_hz must be > 0")


class _SessionRunner:
    """One live session plus its telemetry pump and subscribers."""

    def __init__(self, service: "StreamService", name: str):
        self.service = service
        self.name = name
        self.session = Session(service.cfg.technique, service.cfg.configs)
        self.rate_hz = service.cfg.telemetry_rate_hz
        self.latest: TelemetryRecord | None = None
        self.published: TelemetryRecord | None = None
        self.subscribers: set = set()  # per-session sinks (async callables)
        self.control_sink = None  # sink for deferred control responses
        self.pump_task: asyncio.Task | None = None

    def start(self):
        self.pump_task = asyncio.create_task(self._pump())

    def stop(self):
        if self.pump_task is not None:
            self.pump_task.cancel()

    async def _pump(self):
        try:
            while True:
                await asyncio.sleep(1.0 / self.rate_hz)
                await self.flush_responses()
                rec = self.latest
                if rec is None or rec is self.published:
                    continue
                self.published = rec
                line = rec.to_json()
                await self._broadcast(line)
        except asyncio.CancelledError:
            pass

    async def _broadcast(self, line: str):
        for sink in list(self.subscribers):
            try:
                await sink(line)
            except Exception:
                self.subscribers.discard(sink)
        if self.service.active is self:
            await self.service.broadcast_telemetry(line)

    async def flush_responses(self):
        for resp in self.session.drain_responses():
            if self.control_sink is not None:
                try:
                    await self.control_sink(resp)
                except Exception:
                    self.control_sink = None

    async def handle_control(self, line: str, sink) -> None:
        try:
            resp = self.session.control(line)
        except ControlError as exc:
            await sink(f"err {exc}")
            return
        if resp is None:
            self.control_sink = sink  # deferred (calibrate); answered on completion
            return
        await sink(resp)

    def process(self, frame) -> TelemetryRecord:
        rec = self.session.process(frame)
        self.latest = rec
        return rec


class StreamService:
    """Asyncio server bundle around per-connection sessions."""

    def __init__(self, cfg: SessionConfig):
        self.cfg = cfg
        self.active: _SessionRunner | None = None
        self.runners: set[_SessionRunner] = set()
        self.telem_writers: set[asyncio.StreamWriter] = set()
        self.ws_telem: set = set()
        self._servers = []
        self._ws_server = None

    # -- lifecycle -----------------------------------------------------------

    async def start(self):
        import websockets.asyncio.server as ws_server

        try:
            ingest = await asyncio.start_server(
                self._ingest_conn, self.cfg.host, self.cfg.ingest_port
            )
            telem = await asyncio.start_server(
                self._telemetry_conn, self.cfg.host, self.cfg.telemetry_port
            )
            self._ws_server = await ws_server.serve(
                self._ws_conn, self.cfg.host, self.cfg.ws_port
            )
        except OSError as exc:
            raise BindFailure(str(exc)) from exc
        self._servers = [ingest, telem]
        self.ingest_port = ingest.sockets[0].getsockname()[1]
        self.telemetry_port = telem.sockets[0].getsockname()[1]
        self.ws_port = next(iter(self._ws_server.sockets)).getsockname()[1]
        log.info(
            "serving ingest=%s telemetry=%s ws=%s",
            self.ingest_port, self.telemetry_port, self.ws_port,
        )

    async def stop(self):
        for runner in list(self.runners):
            runner.stop()
        for server in self._servers:
            server.close()
            await server.wait_closed()
        if self._ws_server is not None:
            self._ws_server.close()
            await self._ws_server.wait_closed()

    async def run_forever(self):
        await self.start()
        await asyncio.Event().wait()

    # -- telemetry fan-out ----------------------------------------------------

    async def broadcast_telemetry(self, line: str):
        data = (line + "\n").encode()
        for writer in list(self.telem_writers):
            try:
                writer.write(data)
                await writer.drain()
            except (ConnectionError, OSError):
                self.telem_writers.discard(writer)
        for ws in list(self.ws_telem):
            try:
                await ws.send(line)
            except Exception:
                self.ws_telem.discard(ws)

    # -- session bookkeeping ---------------------------------------------------

    def _open_runner(self, name: str) -> _SessionRunner:
        runner = _SessionRunner(self, name)
        runner.start()
        self.runners.add(runner)
        self.active = runner
        return runner

    def _close_runner(self, runner: _SessionRunner):
        runner.stop()
        self.runners.discard(runner)
        if self.active is runner:
            self.active = next(iter(self.runners), None)

    # -- TCP handlers -----------------------------------------------------------

    async def _ingest_conn(self, reader: asyncio.StreamReader, writer: asyncio.StreamWriter):
        peer = writer.get_extra_info("peername")
        runner = self._open_runner(f"tcp:{peer}")

        async def sink(line: str):
            writer.write((line + "\n").encode())
            await writer.drain()

        try:
            while True:
                try:
                    first = await reader.readexactly(1)
                except asyncio.IncompleteReadError:
                    break
                if first == b"!":
                    raw = await reader.readline()
                    line = raw.decode("utf-8", "replace").strip()
                    if line == "subscribe on":
                        runner.subscribers.add(sink)
                        await sink("ok subscribe on")
                    elif line == "subscribe off":
                        runner.subscribers.discard(sink)
                        await sink("ok subscribe off")
                    else:
                        await runner.handle_control(line, sink)
                    continue
                rest = await reader.readexactly(FRAME_SIZE - 1)
                try:
                    frame = decode_frame(first + rest)
                    runner.process(frame)
                except (FrameError, ProtocolError) as exc:
                    log.warning("session %s protocol error: %s", runner.name, exc)
                    try:
                        await sink(f"err protocol {exc}")
                    except (ConnectionError, OSError):
                        pass
                    break
                await runner.flush_responses()
        except (ConnectionError, OSError):
            pass
        finally:
            self._close_runner(runner)
            writer.close()

    async def _telemetry_conn(self, reader: asyncio.StreamReader, writer: asyncio.StreamWriter):
        self.telem_writers.add(writer)
        try:
            await reader.read()  # hold open until the client disconnects
        except (ConnectionError, OSError):
            pass
        finally:
            self.telem_writers.discard(writer)
            writer.close()

    # -- WebSocket handlers -------------------------------------------------------

    async def _ws_conn(self, conn):
        path = conn.request.path
        if path == "/telemetry":
            await self._ws_telemetry(conn)
        elif path == "/control":
            await self._ws_control(conn)
        elif path == "/ingest-b64":
            await self._ws_ingest(conn)
        else:
            await conn.close(code=1008, reason=f"unknown path {path}")

    async def _ws_telemetry(self, conn):
        self.ws_telem.add(conn)
        try:
            await conn.wait_closed()
        finally:
            self.ws_telem.discard(conn)

    async def _ws_control(self, conn):
        async def sink(line: str):
            await conn.send(line)

        try:
            async for message in conn:
                line = message.strip() if isinstance(message, str) else ""
                if self.active is None:
                    await sink("err no-active-session")
                    continue
                await self.active.handle_control(line.lstrip("!"), sink)
        except Exception:
            pass

    async def _ws_ingest(self, conn):
        runner = self._open_runner("ws-ingest")

        async def sink(line: str):
            await conn.send(line)

        try:
            async for message in conn:
                if isinstance(message, bytes):
                    message = message.decode("utf-8", "replace")
                if message.startswith("!"):
                    line = message[1:].strip()
                    if line == "subscribe on":
                        runner.subscribers.add(sink)
                        await sink("ok subscribe on")
                    elif line == "subscribe off":
                        runner.subscribers.discard(sink)
                        await sink("ok subscribe off")
                    else:
                        await runner.handle_control(line, sink)
                    continue
                try:
                    frame = decode_frame(base64.b64decode(message, validate=True))
                    runner.process(frame)
                except (binascii.Error, FrameError, ProtocolError) as exc:
                    log.warning("ws session protocol error: %s", exc)
                    await sink(f"err protocol {exc}")
                    break
                await runner.flush_responses()
        except Exception:
            pass
        finally:
            self._close_runner(runner)
            await conn.close()


def serve(cfg: SessionConfig) -> None:
    """Run the service until interrupted."""
    async def _run():
        service = StreamService(cfg)
        await service.run_forever()

    asyncio.run(_run())
