"""Live server integration: real TCP ingest, real WebSocket delivery."""
import asyncio
import json
import urllib.request

from websockets.asyncio.client import connect

from capfuse.ingest import encode_event
from capfuse.pipeline import replay_file
from capfuse.server import CaptionServer
from capfuse.sessionio import read_session

from helpers import tok, tone, watermark

GOLDEN = "tests/data/golden_session.ndjson"


async def start_server(**kw):
    kw.setdefault("ingest_port", 0)
    kw.setdefault("client_port", 0)
    kw.setdefault("liveness", False)
    kw.setdefault("ping_interval_s", 0)
    server = CaptionServer(**kw)
    await server.start()
    return server


async def feed_events(port, events):
    reader, writer = await asyncio.open_connection("127.0.0.1", port)
    for event in events:
        writer.write((encode_event(event) + "\n").encode())
    await writer.drain()
    writer.close()
    await writer.wait_closed()
    await asyncio.sleep(0.2)  # let the reader task drain


class Client:
    def __init__(self, port, hello=None):
        self.uri = f"ws://127.0.0.1:{port}"
        self.hello = hello or {"type": "hello", "v": 1}
        self.messages = []

    async def __aenter__(self):
        self.ws = await connect(self.uri)
        await self.ws.send(json.dumps(self.hello))
        return self

    async def __aexit__(self, *exc):
        await self.ws.close()

    async def recv(self, timeout=5.0):
        msg = json.loads(await asyncio.wait_for(self.ws.recv(), timeout))
        self.messages.append(msg)
        return msg

    async def send(self, obj):
        await self.ws.send(json.dumps(obj))

    async def recv_until(self, pred, timeout=5.0):
        async with asyncio.timeout(timeout) if hasattr(asyncio, "timeout") else _null():
            while True:
                msg = await self.recv(timeout)
                if pred(msg):
                    return msg

    def finals(self):
        out = []
        for msg in self.messages:
            if msg.get("type") == "snapshot":
                out.extend(m for m in msg["segments"] if m["state"] == "final")
            elif msg.get("type") == "segment" and msg.get("state") == "final":
                out.append(msg)
        return out


def _null():
    class _N:
        async def __aenter__(self):
            return self

        async def __aexit__(self, *a):
            return False

    return _N()


def golden_events():
    return [line.event for line in read_session(GOLDEN)]


def test_golden_session_over_the_wire():
    async def scenario():
        server = await start_server()
        try:
            async with Client(server.client_port) as client:
                ack = await client.recv()
                assert ack["type"] == "hello_ack"
                snap = await client.recv()
                assert snap["type"] == "snapshot" and snap["segments"] == []

                await feed_events(server.ingest_port, golden_events())
                # Eight segments finalize from in-file watermarks; the
                # trailing partial only finalizes on shutdown flush.
                await client.recv_until(
                    lambda m: m.get("type") == "segment"
                    and m.get("state") == "final"
                    and "quiz" in m["plain"]
                )
                pre_stop = len(client.finals())
                assert pre_stop == 8
                stopper = asyncio.create_task(server.stop())
                last = await client.recv_until(
                    lambda m: m.get("type") == "segment" and m.get("state") == "final"
                )
                await stopper
                assert last["plain"] == "goodby"
        finally:
            await server.stop()
        return server.pipeline.result().transcript

    live_transcript = asyncio.run(scenario())
    assert live_transcript == replay_file(GOLDEN).transcript


def test_rendering_follows_session_profile():
    async def scenario():
        server = await start_server()
        try:
            hello = {"type": "hello", "v": 1, "prefs": {"verbosity": "verbose"}}
            async with Client(server.client_port, hello) as client:
                await client.recv()
                await client.recv()
                await feed_events(
                    server.ingest_port,
                    [
                        tok(1, "Careful.", 0, 400),
                        tone(1, "urgent", 0, 500, 0.9),
                        watermark("asr", 1000),
                        watermark("affect", 1000),
                        watermark("gesture", 1000),
                    ],
                )
                final = await client.recv_until(
                    lambda m: m.get("type") == "segment" and m["state"] == "final"
                )
                assert final["rendered"] == "[urgent tone] Careful."
                assert final["plain"] == "Careful."
        finally:
            await server.stop()

    asyncio.run(scenario())


def test_prefs_toggle_mid_session():
    async def scenario():
        server = await start_server()
        try:
            async with Client(server.client_port) as client:
                await client.recv()
                await client.recv()
                await client.send({"type": "prefs", "patch": {"verbosity": "off"}})
                ack = await client.recv_until(lambda m: m.get("type") == "prefs_ack")
                assert ack["prefs"]["verbosity"] == "off"

                await feed_events(
                    server.ingest_port,
                    [
                        tok(1, "Quiet.", 0, 400),
                        tone(1, "calm", 0, 500, 0.9),
                        *(watermark(s, 1000) for s in ("asr", "affect", "gesture")),
                    ],
                )
                final = await client.recv_until(
                    lambda m: m.get("type") == "segment" and m["state"] == "final"
                )
                assert final["rendered"] == final["plain"] == "Quiet."
        finally:
            await server.stop()

    asyncio.run(scenario())


def test_invalid_prefs_patch_rejected_over_wire():
    async def scenario():
        server = await start_server()
        try:
            async with Client(server.client_port) as client:
                await client.recv()
                await client.recv()
                await client.send({"type": "prefs", "patch": {"font_scale": 99}})
                err = await client.recv_until(lambda m: m.get("type") == "error")
                assert err["code"] == "invalid_preference"
                assert err["detail"] == "font_scale"
        finally:
            await server.stop()

    asyncio.run(scenario())


def test_bad_version_closed():
    async def scenario():
        server = await start_server()
        try:
            async with Client(server.client_port, {"type": "hello", "v": 9}) as client:
                err = await client.recv()
                assert err["code"] == "bad_version"
                closed = await client.ws.wait_closed() or True
                assert closed
        finally:
            await server.stop()

    asyncio.run(scenario())


def test_late_joiner_reconstructs_continuous_state():
    async def scenario():
        server = await start_server()
        try:
            events = golden_events()
            split = len(events) // 2
            async with Client(server.client_port) as early:
                await early.recv(), await early.recv()
                await feed_events(server.ingest_port, events[:split])
                async with Client(server.client_port) as late:
                    await late.recv(), await late.recv()
                    await feed_events(server.ingest_port, events[split:])
                    await asyncio.sleep(0.3)
                    for client in (early, late):
                        try:
                            while True:
                                await client.recv(timeout=0.3)
                        except (asyncio.TimeoutError, TimeoutError):
                            pass
                    early_finals = [(m["id"], m["rendered"]) for m in early.finals()]
                    late_finals = [(m["id"], m["rendered"]) for m in late.finals()]
                    assert late_finals == early_finals[-len(late_finals):]
                    assert late_finals  # the late joiner saw something
        finally:
            await server.stop()

    asyncio.run(scenario())


def test_resume_after_disconnect_is_lossless_for_finals():
    async def scenario():
        server = await start_server()
        try:
            events = golden_events()
            split = len(events) // 2
            async with Client(server.client_port) as witness:
                await witness.recv(), await witness.recv()

                first = Client(server.client_port)
                async with first:
                    ack = await first.recv()
                    snap = await first.recv()
                    token = snap["cursor"]
                    await feed_events(server.ingest_port, events[:split])
                    await asyncio.sleep(0.3)
                    try:
                        while True:
                            await first.recv(timeout=0.3)
                    except (asyncio.TimeoutError, TimeoutError):
                        pass
                # first is now disconnected; more of the lecture flows.
                await feed_events(server.ingest_port, events[split:])
                await asyncio.sleep(0.3)

                resumer = Client(
                    server.client_port, {"type": "hello", "v": 1, "resume": token}
                )
                async with resumer:
                    ack = await resumer.recv()
                    assert ack["resumed"] is True
                    await resumer.recv()
                    try:
                        while True:
                            await resumer.recv(timeout=0.3)
                    except (asyncio.TimeoutError, TimeoutError):
                        pass
                try:
                    while True:
                        await witness.recv(timeout=0.3)
                except (asyncio.TimeoutError, TimeoutError):
                    pass
                witness_ids = [m["id"] for m in witness.finals()]
                resumed_ids = [m["id"] for m in resumer.finals()]
                # The resume cursor was taken before any finals, so the
                # resumed session must have seen every final the witness saw.
                assert resumed_ids == witness_ids
        finally:
            await server.stop()

    asyncio.run(scenario())


def test_metrics_endpoint_serves_json():
    async def scenario():
        server = await start_server(metrics_port=0)
        try:
            await feed_events(server.ingest_port, golden_events())
            await asyncio.sleep(0.2)
            port = server.metrics_port
            data = await asyncio.to_thread(
                lambda: json.loads(
                    urllib.request.urlopen(
                        f"http://127.0.0.1:{port}/metrics", timeout=5
                    ).read()
                )
            )
            assert data["segments_final"] == 8  # trailing partial still open
            assert data["events_in"]["asr"] > 0
            lat = data["finalization_latency_ms"]
            assert lat["p50"] <= lat["p95"] <= lat["max"]
        finally:
            await server.stop()

    asyncio.run(scenario())


def test_liveness_policy_unsticks_stalled_sources():
    async def scenario():
        server = await start_server(liveness=True)
        try:
            async with Client(server.client_port) as client:
                await client.recv(), await client.recv()
                # Tokens plus asr beats only; affect and gesture stay silent.
                await feed_events(
                    server.ingest_port,
                    [tok(1, "Stalled.", 0, 300), watermark("asr", 2000)],
                )
                final = await client.recv_until(
                    lambda m: m.get("type") == "segment" and m["state"] == "final",
                    timeout=8.0,
                )
                assert final["plain"] == "Stalled."
        finally:
            await server.stop()

    asyncio.run(scenario())


def test_ping_emitted_on_interval():
    async def scenario():
        server = await start_server(ping_interval_s=0.2)
        try:
            async with Client(server.client_port) as client:
                await client.recv(), await client.recv()
                msg = await client.recv_until(lambda m: m.get("type") == "ping", timeout=3.0)
                assert msg == {"type": "ping"}
                await client.send({"type": "pong"})
        finally:
            await server.stop()

    asyncio.run(scenario())


def test_record_tap_round_trips(tmp_path):
    async def scenario():
        path = tmp_path / "tap.ndjson"
        server = await start_server(record_to=path, enable_delivery=False)
        try:
            await feed_events(server.ingest_port, golden_events())
            await asyncio.sleep(0.2)
        finally:
            await server.stop()
        return path, server.pipeline.result().transcript

    path, live_transcript = asyncio.run(scenario())
    assert replay_file(path).transcript == live_transcript
