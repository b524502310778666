"""Live servers: NDJSON ingest over TCP, client delivery over WebSocket,
and a minimal metrics endpoint.

One asyncio loop hosts everything. The pipeline is single-writer (only
ingest connection handlers and the liveness timer feed it); per-session
writer tasks own their outbound queues.
"""
from __future__ import annotations

import asyncio
import json
import logging
from pathlib import Path
from typing import Any, Optional

from websockets.asyncio.server import Server, ServerConnection, serve
from websockets.exceptions import ConnectionClosed

from .delivery import PING_INTERVAL_S, ClientSession, DeliveryHub, error_message
from .fusion import FusionConfig
from .ingest import (
    IngestError,
    MalformedJson,
    SchemaViolation,
    UnsupportedVersion,
    WatermarkBeat,
    decode_event,
)
from .metrics import MetricsReport
from .model import UnknownLabel
from .pipeline import Pipeline
from .sessionio import SessionRecorder

log = logging.getLogger(__name__)

STALL_AFTER_S = 2.0
STALL_CHECK_EVERY_S = 0.5


def _reject_reason(exc: Exception) -> str:
    if isinstance(exc, MalformedJson):
        return "malformed_json"
    if isinstance(exc, UnsupportedVersion):
        return "unsupported_version"
    if isinstance(exc, UnknownLabel):
        return "unknown_label"
    if isinstance(exc, SchemaViolation):
        return "schema"
    return "decode_error"


class CaptionServer:
    """Hosts ingest, delivery and metrics for one live session."""

    def __init__(
        self,
        config: Optional[FusionConfig] = None,
        ingest_port: int = 7001,
        client_port: int = 7002,
        metrics_port: Optional[int] = None,
        host: str = "127.0.0.1",
        record_to: Optional[str | Path] = None,
        ping_interval_s: float = PING_INTERVAL_S,
        enable_delivery: bool = True,
        liveness: bool = True,
    ):
        self.host = host
        self._requested_ports = (ingest_port, client_port, metrics_port)
        self.config = config or FusionConfig()
        self.hub = DeliveryHub()
        self.ping_interval_s = ping_interval_s
        self.enable_delivery = enable_delivery
        self.liveness = liveness
        self.record_path = Path(record_to) if record_to else None
        self._recorder: Optional[SessionRecorder] = None
        self._record_fp = None
        self.pipeline: Optional[Pipeline] = None
        self._ingest_server: Optional[asyncio.base_events.Server] = None
        self._ws_server: Optional[Server] = None
        self._metrics_server: Optional[asyncio.base_events.Server] = None
        self._tasks: set[asyncio.Task] = set()
        self._session_events: dict[str, asyncio.Event] = {}
        self._epoch: float = 0.0
        self._last_beat_wall: dict[str, float] = {}
        self._stopped = False

    # ------------------------------------------------------------------

    @property
    def ingest_port(self) -> int:
        assert self._ingest_server is not None
        return self._ingest_server.sockets[0].getsockname()[1]

    @property
    def client_port(self) -> Optional[int]:
        if self._ws_server is None:
            return None
        for sock in self._ws_server.sockets:
            return sock.getsockname()[1]
        return None

    @property
    def metrics_port(self) -> Optional[int]:
        if self._metrics_server is None:
            return None
        return self._metrics_server.sockets[0].getsockname()[1]

    def session_now_ms(self) -> int:
        return int((asyncio.get_running_loop().time() - self._epoch) * 1000)

    async def start(self) -> None:
        loop = asyncio.get_running_loop()
        self._epoch = loop.time()
        self.pipeline = Pipeline(
            self.config,
            clock=loop.time,
            wall_of_event_time=lambda t: self._epoch + t / 1000.0,
        )
        self.pipeline.subscribe(self.hub.publish)
        self.hub.on_enqueue(self._wake_session)

        ingest_port, client_port, metrics_port = self._requested_ports
        self._ingest_server = await asyncio.start_server(
            self._handle_ingest, self.host, ingest_port
        )
        if self.enable_delivery:
            self._ws_server = await serve(self._handle_client, self.host, client_port)
        if metrics_port is not None:
            self._metrics_server = await asyncio.start_server(
                self._handle_metrics, self.host, metrics_port
            )
        if self.record_path is not None:
            self._record_fp = open(self.record_path, "w", encoding="utf-8")
            self._recorder = SessionRecorder(self._record_fp)
        if self.liveness:
            self._spawn(self._liveness_loop())
        if self.enable_delivery and self.ping_interval_s > 0:
            self._spawn(self._ping_loop())
        log.info(
            "listening ingest=%s client=%s metrics=%s",
            self.ingest_port,
            self.client_port,
            self.metrics_port,
        )

    async def stop(self) -> None:
        """Flush open segments to finals, then tear everything down."""
        if self._stopped:
            return
        self._stopped = True
        if self.pipeline is not None:
            self.pipeline.finish()
        if self._recorder is not None:
            self._recorder.close()
            self._record_fp.close()
        await asyncio.sleep(0)  # give writers one pass at the flushed finals
        for task in list(self._tasks):
            task.cancel()
        await asyncio.gather(*self._tasks, return_exceptions=True)
        if self._ingest_server is not None:
            self._ingest_server.close()
            await self._ingest_server.wait_closed()
        if self._ws_server is not None:
            self._ws_server.close()
            await self._ws_server.wait_closed()
        if self._metrics_server is not None:
            self._metrics_server.close()
            await self._metrics_server.wait_closed()

    def _spawn(self, coro) -> asyncio.Task:
        task = asyncio.get_running_loop().create_task(coro)
        self._tasks.add(task)
        task.add_done_callback(self._tasks.discard)
        return task

    # ------------------------------------------------------------------
    # ingest side

    async def _handle_ingest(self, reader: asyncio.StreamReader, writer: asyncio.StreamWriter) -> None:
        peer = writer.get_extra_info("peername")
        log.info("ingest connection from %s", peer)
        try:
            async for raw in _lines(reader):
                try:
                    event = decode_event(raw)
                except (IngestError, UnknownLabel) as exc:
                    self.pipeline.metrics.count_in("invalid")
                    self.pipeline.metrics.count_rejected(_reject_reason(exc))
                    log.debug("ingest decode error from %s: %s", peer, exc)
                    continue
                if isinstance(event.payload, WatermarkBeat):
                    self._last_beat_wall[event.source] = asyncio.get_running_loop().time()
                accepted = self.pipeline.feed(event)
                if accepted and self._recorder is not None:
                    self._recorder.record(event)
        except (ConnectionResetError, asyncio.IncompleteReadError):
            pass
        finally:
            log.info("ingest connection closed: %s", peer)
            writer.close()

    async def _liveness_loop(self) -> None:
        """Advance the watermark of any stalled source so captions keep
        flowing; a silent peer must not freeze every viewer's display."""
        loop = asyncio.get_running_loop()
        while True:
            await asyncio.sleep(STALL_CHECK_EVERY_S)
            now_ms = self.session_now_ms()
            horizon = max(0, now_ms - int(STALL_AFTER_S * 1000))
            for source in ("asr", "affect", "gesture"):
                last = self._last_beat_wall.get(source)
                if last is not None and loop.time() - last <= STALL_AFTER_S:
                    continue
                state = self.pipeline.states[source]
                if horizon > state.watermark:
                    state.watermark = horizon
                    self.pipeline.engine.watermarks[source] = max(
                        self.pipeline.engine.watermarks[source], horizon
                    )
            self.pipeline.advance()

    # ------------------------------------------------------------------
    # delivery side

    def _wake_session(self, session: ClientSession) -> None:
        event = self._session_events.get(session.session_id)
        if event is not None:
            event.set()

    async def _handle_client(self, connection: ServerConnection) -> None:
        try:
            raw = await asyncio.wait_for(connection.recv(), timeout=10.0)
        except (asyncio.TimeoutError, ConnectionClosed):
            return
        try:
            hello = json.loads(raw)
        except json.JSONDecodeError:
            await connection.send(json.dumps(error_message("bad_message", "invalid JSON")))
            return

        session, messages = self.hub.handshake(hello if isinstance(hello, dict) else {})
        if session is None:
            for msg in messages:
                await connection.send(json.dumps(msg))
            await connection.close(code=1002, reason="handshake rejected")
            return

        wake = asyncio.Event()
        wake.set()
        self._session_events[session.session_id] = wake
        writer = self._spawn(self._session_writer(session, connection, wake))
        try:
            async for raw in connection:
                try:
                    msg = json.loads(raw)
                except json.JSONDecodeError:
                    self.hub._enqueue_control(session, error_message("bad_message", "invalid JSON"))
                    continue
                self.hub.client_message(session, msg if isinstance(msg, dict) else {})
        except ConnectionClosed:
            pass
        finally:
            self.hub.disconnect(session)
            self._session_events.pop(session.session_id, None)
            writer.cancel()

    async def _session_writer(
        self, session: ClientSession, connection: ServerConnection, wake: asyncio.Event
    ) -> None:
        try:
            while True:
                await wake.wait()
                wake.clear()
                while session.outbox:
                    await connection.send(json.dumps(session.outbox.popleft()))
                if session.kill_reason:
                    await connection.send(json.dumps(error_message(session.kill_reason)))
                    await connection.close(code=1008, reason=session.kill_reason)
                    return
        except (ConnectionClosed, asyncio.CancelledError):
            pass

    async def _ping_loop(self) -> None:
        while True:
            await asyncio.sleep(self.ping_interval_s)
            self.hub.ping_all()

    # ------------------------------------------------------------------
    # metrics endpoint

    def metrics_report(self) -> MetricsReport:
        return self.pipeline.metrics.snapshot(
            cues_pending=self.pipeline.engine.pending_cue_count
        )

    async def _handle_metrics(self, reader: asyncio.StreamReader, writer: asyncio.StreamWriter) -> None:
        try:
            request_line = await reader.readline()
            while True:
                header = await reader.readline()
                if header in (b"\r\n", b"\n", b""):
                    break
            body = json.dumps(self.metrics_report().to_dict(), indent=2).encode()
            status = b"200 OK" if request_line.startswith(b"GET") else b"405 Method Not Allowed"
            writer.write(
                b"HTTP/1.1 " + status + b"\r\n"
                b"Content-Type: application/json\r\n"
                b"Content-Length: " + str(len(body)).encode() + b"\r\n"
                b"Connection: close\r\n\r\n" + body
            )
            await writer.drain()
        except (ConnectionResetError, asyncio.IncompleteReadError):
            pass
        finally:
            writer.close()


async def _lines(reader: asyncio.StreamReader):
    while True:
        line = await reader.readline()
        if not line:
            return
        if line.strip():
            yield line
