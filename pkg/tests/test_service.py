"""Live service tests over real sockets on ephemeral ports."""

import asyncio
import base64
import json

import pytest

from glide.config import Configs
from glide.frames import PressureFrame, encode_frame
from glide.service import SessionConfig, StreamService


def ephemeral_cfg(**kwargs) -> SessionConfig:
    return SessionConfig(ingest_port=0, telemetry_port=0, ws_port=0, **kwargs)


def neutral_bytes(n=120, start_us=0, dt_us=10_000):
    return b"".join(
        encode_frame(PressureFrame(start_us + k * dt_us, 500, 500, 500, 500))
        for k in range(n)
    )


async def read_lines_until(reader, predicate, limit=200, timeout=5.0):
    """Collect decoded lines until predicate(line) is true; returns all lines."""
    lines = []
    for _ in range(limit):
        raw = await asyncio.wait_for(reader.readline(), timeout)
        if not raw:
            break
        line = raw.decode().strip()
        lines.append(line)
        if predicate(line):
            return lines
    raise AssertionError(f"predicate never satisfied; got {lines[-5:]}")


class TestIngestAndControl:
    def test_calibrate_flow_flips_telemetry(self):
        async def main():
            service = StreamService(ephemeral_cfg(telemetry_rate_hz=200.0))
            await service.start()
            try:
                reader, writer = await asyncio.open_connection(
                    "127.0.0.1", service.ingest_port
                )
                writer.write(b"!subscribe on\n")
                writer.write(b"!calibrate 1.0\n")
                writer.write(neutral_bytes(n=130))
                await writer.drain()
                lines = await read_lines_until(
                    reader, lambda l: l.startswith("ok calibrate")
                )
                assert "ok subscribe on" in lines
                # keep streaming so the pump publishes a calibrated record
                writer.write(neutral_bytes(n=30, start_us=2_000_000))
                await writer.drain()
                lines = await read_lines_until(
                    reader,
                    lambda l: l.startswith("{") and json.loads(l)["calibrated"],
                )
                records = [json.loads(l) for l in lines if l.startswith("{")]
                assert records, "no telemetry records received"
                writer.close()
            finally:
                await service.stop()

        asyncio.run(main())

    def test_decreasing_timestamps_close_connection(self):
        async def main():
            service = StreamService(ephemeral_cfg())
            await service.start()
            try:
                reader, writer = await asyncio.open_connection(
                    "127.0.0.1", service.ingest_port
                )
                writer.write(encode_frame(PressureFrame(1000, 500, 500, 500, 500)))
                writer.write(encode_frame(PressureFrame(500, 500, 500, 500, 500)))
                await writer.drain()
                lines = await read_lines_until(
                    reader, lambda l: l.startswith("err protocol")
                )
                assert lines[-1].startswith("err protocol")
                rest = await asyncio.wait_for(reader.read(), 5.0)
                assert rest == b""  # server closed the connection
                writer.close()
            finally:
                await service.stop()

        asyncio.run(main())

    def test_ping_and_bad_command(self):
        async def main():
            service = StreamService(ephemeral_cfg())
            await service.start()
            try:
                reader, writer = await asyncio.open_connection(
                    "127.0.0.1", service.ingest_port
                )
                writer.write(b"!ping\n!warp 9\n")
                await writer.drain()
                lines = await read_lines_until(reader, lambda l: l.startswith("err"))
                assert "ok ping" in lines
                assert lines[-1].startswith("err unknown-command")
                writer.close()
            finally:
                await service.stop()

        asyncio.run(main())

    def test_malformed_frame_does_not_stall_other_session(self):
        async def main():
            service = StreamService(ephemeral_cfg(telemetry_rate_hz=200.0))
            await service.start()
            try:
                r_bad, w_bad = await asyncio.open_connection(
                    "127.0.0.1", service.ingest_port
                )
                # healthy session opens second: becomes the active one
                r_ok, w_ok = await asyncio.open_connection(
                    "127.0.0.1", service.ingest_port
                )
                w_ok.write(b"!subscribe on\n")
                w_bad.write(b"\x00" * 22)  # bad magic kills only this session
                await w_bad.drain()
                w_ok.write(neutral_bytes(n=50))
                await w_ok.drain()
                lines = await read_lines_until(r_ok, lambda l: l.startswith("{"))
                assert any(l.startswith("{") for l in lines)
                err = await read_lines_until(r_bad, lambda l: l.startswith("err"))
                assert err[-1].startswith("err protocol")
                w_bad.close()
                w_ok.close()
            finally:
                await service.stop()

        asyncio.run(main())

    def test_session_isolation_configs(self):
        async def main():
            service = StreamService(ephemeral_cfg())
            await service.start()
            try:
                r1, w1 = await asyncio.open_connection("127.0.0.1", service.ingest_port)
                r2, w2 = await asyncio.open_connection("127.0.0.1", service.ingest_port)
                w1.write(b"!set chain.tau_s 0.4\n")
                await w1.drain()
                await read_lines_until(r1, lambda l: l.startswith("ok set"))
                w2.write(b"!stats\n")
                await w2.drain()
                await read_lines_until(r2, lambda l: l.startswith("ok stats"))
                runners = list(service.runners)
                taus = sorted(r.session.configs.chain.tau_s for r in runners)
                assert taus == [0.08, 0.4]
                w1.close()
                w2.close()
            finally:
                await service.stop()

        asyncio.run(main())


class TestTelemetryPort:
    def test_active_session_records_on_telemetry_port(self):
        async def main():
            service = StreamService(ephemeral_cfg(telemetry_rate_hz=500.0))
            await service.start()
            try:
                t_reader, t_writer = await asyncio.open_connection(
                    "127.0.0.1", service.telemetry_port
                )
                reader, writer = await asyncio.open_connection(
                    "127.0.0.1", service.ingest_port
                )

                async def feed():
                    writer.write(b"!calibrate 0.5\n")
                    for k in range(200):
                        writer.write(
                            encode_frame(PressureFrame(k * 10_000, 500, 500, 500, 500))
                        )
                        await writer.drain()
                        await asyncio.sleep(0.002)

                feeder = asyncio.create_task(feed())
                raw = await asyncio.wait_for(t_reader.readline(), 10.0)
                rec = json.loads(raw.decode())
                assert set(rec) == {"t_us", "pose", "twist", "u_L", "u_R",
                                    "calibrated", "latency_us"}
                feeder.cancel()
                writer.close()
                t_writer.close()
            finally:
                await service.stop()

        asyncio.run(main())


class TestWebSocket:
    def test_ingest_b64_control_and_telemetry(self):
        async def main():
            import websockets

            service = StreamService(ephemeral_cfg(telemetry_rate_hz=200.0))
            await service.start()
            try:
                uri = f"ws://127.0.0.1:{service.ws_port}"
                async with websockets.connect(uri + "/ingest-b64") as ingest:
                    await ingest.send("!ping")
                    assert await asyncio.wait_for(ingest.recv(), 5.0) == "ok ping"
                    async with websockets.connect(uri + "/telemetry") as telem:
                        await ingest.send("!subscribe on")
                        assert (await ingest.recv()) == "ok subscribe on"
                        for k in range(60):
                            frame = encode_frame(
                                PressureFrame(k * 10_000, 500, 500, 500, 500)
                            )
                            await ingest.send(base64.b64encode(frame).decode())
                            await asyncio.sleep(0.002)
                        msg = await asyncio.wait_for(telem.recv(), 5.0)
                        rec = json.loads(msg)
                        assert rec["calibrated"] is False
                    async with websockets.connect(uri + "/control") as control:
                        await control.send("stats")
                        resp = await asyncio.wait_for(control.recv(), 5.0)
                        assert resp.startswith("ok stats")
            finally:
                await service.stop()

        asyncio.run(main())

    def test_bad_b64_closes_session(self):
        async def main():
            import websockets

            service = StreamService(ephemeral_cfg())
            await service.start()
            try:
                uri = f"ws://127.0.0.1:{service.ws_port}/ingest-b64"
                async with websockets.connect(uri) as ingest:
                    await ingest.send("not base64!!!")
                    resp = await asyncio.wait_for(ingest.recv(), 5.0)
                    assert resp.startswith("err protocol")
            finally:
                await service.stop()

        asyncio.run(main())


class TestConfigValidation:
    def test_distinct_ports_required(self):
        with pytest.raises(ValueError):
            SessionConfig(ingest_port=9999, telemetry_port=9999)

    def test_configs_carried(self):
        cfg = ephemeral_cfg(configs=Configs.default())
        assert cfg.configs.chain.tau_s == 0.08
