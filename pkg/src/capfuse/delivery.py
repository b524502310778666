"""Client delivery: handshake, snapshot-on-join, per-session fan-out.

The hub is deliberately transport-free: it turns fusion emissions and
client frames into per-session outbound message queues, and the server
layer moves those queues over the wire. That keeps every protocol rule
(resume cursors, backpressure, coalescing) testable without sockets.
"""
from __future__ import annotations

import logging
import secrets
from collections import deque
from dataclasses import dataclass, field
from typing import Any, Deque, Optional

from .fusion import Emission
from .model import CaptionSegment
from .preferences import (
    InvalidPreference,
    PreferenceProfile,
    apply_patch,
    validate_patch,
)
from .rendering import render_segment_text

log = logging.getLogger(__name__)

PROTOCOL_VERSION = 1
SNAPSHOT_FINALS = 50
QUEUE_LIMIT = 256
PING_INTERVAL_S = 15.0


def segment_message(segment: CaptionSegment, profile: PreferenceProfile) -> dict[str, Any]:
    """One segment frame: server-side rendering plus the structured
    annotations a rich client needs to re-render locally."""
    return {
        "type": "segment",
        "id": segment.segment_id,
        "state": segment.state,
        "rev": segment.revision,
        "t0": segment.t_start,
        "t1": segment.t_end,
        "plain": segment.plain_text,
        "rendered": render_segment_text(segment, profile),
        "annotations": [
            {
                "cat": ann.category,
                "label": ann.label.name,
                "anchor": ann.anchor,
                "conf": ann.confidence,
            }
            for ann in segment.annotations
        ],
    }


def error_message(code: str, detail: str = "") -> dict[str, Any]:
    return {"type": "error", "code": code, "detail": detail}


@dataclass
class ClientSession:
    session_id: str
    profile: PreferenceProfile = field(default_factory=PreferenceProfile)
    last_acked_final: int = 0
    connected: bool = False
    outbox: Deque[dict[str, Any]] = field(default_factory=deque)
    kill_reason: Optional[str] = None
    revisions_dropped: int = 0

    @property
    def resume_token(self) -> str:
        return f"{self.session_id}:{self.last_acked_final}"


class DeliveryHub:
    """Session registry and fan-out for one running caption engine."""

    def __init__(self, queue_limit: int = QUEUE_LIMIT):
        self.queue_limit = queue_limit
        self.sessions: dict[str, ClientSession] = {}
        self.finals: Deque[tuple[int, CaptionSegment]] = deque(maxlen=SNAPSHOT_FINALS)
        self.final_count = 0
        self.open_segment: Optional[CaptionSegment] = None
        self._wakers: list = []

    def on_enqueue(self, waker) -> None:
        """Register a callable invoked with the session after every enqueue."""
        self._wakers.append(waker)

    # ------------------------------------------------------------------
    # join / resume

    def handshake(self, hello: dict[str, Any]) -> tuple[Optional[ClientSession], list[dict[str, Any]]]:
        """Process a hello frame.

        Returns (session, messages). A None session means the connection
        must close after delivering the messages (version rejection).
        """
        if hello.get("type") != "hello":
            return None, [error_message("bad_message", "expected hello")]
        if hello.get("v") != PROTOCOL_VERSION:
            return None, [error_message("bad_version", f"supported version: {PROTOCOL_VERSION}")]

        warning: Optional[str] = None
        session: Optional[ClientSession] = None
        resumed = False
        since_cursor = 0

        token = hello.get("resume")
        if token is not None:
            session, since_cursor = self._resolve_resume(token)
            if session is None:
                warning = "invalid_resume_token"
            else:
                resumed = True

        if session is None:
            session = ClientSession(session_id=secrets.token_hex(8))
            self.sessions[session.session_id] = session

        messages: list[dict[str, Any]] = []
        prefs_patch = hello.get("prefs")
        if prefs_patch is not None:
            try:
                patch = validate_patch(prefs_patch)
                session.profile = apply_patch(session.profile, patch)
            except InvalidPreference as exc:
                messages.append(error_message("invalid_preference", exc.field))

        session.connected = True
        session.kill_reason = None
        session.outbox.clear()

        ack: dict[str, Any] = {
            "type": "hello_ack",
            "session": session.session_id,
            "prefs": session.profile.to_dict(),
            "resumed": resumed,
        }
        if warning:
            ack["warning"] = warning
        messages.append(ack)
        messages.append(self._snapshot_message(session, since_cursor))
        for msg in messages:
            self._enqueue_control(session, msg)
        return session, messages

    def _resolve_resume(self, token: Any) -> tuple[Optional[ClientSession], int]:
        if not isinstance(token, str) or ":" not in token:
            return None, 0
        sid, _, cursor_text = token.partition(":")
        session = self.sessions.get(sid)
        if session is None or session.connected or not cursor_text.isdigit():
            return None, 0
        return session, int(cursor_text)

    def _snapshot_message(self, session: ClientSession, since_cursor: int) -> dict[str, Any]:
        chosen = [
            segment_message(seg, session.profile)
            for counter, seg in self.finals
            if counter > since_cursor
        ]
        session.last_acked_final = self.final_count
        open_msg = (
            segment_message(self.open_segment, session.profile)
            if self.open_segment is not None
            else None
        )
        return {
            "type": "snapshot",
            "segments": chosen,
            "open": open_msg,
            "cursor": session.resume_token,
        }

    def disconnect(self, session: ClientSession) -> None:
        session.connected = False
        session.outbox.clear()

    # ------------------------------------------------------------------
    # fan-out

    def publish(self, emission: Emission) -> None:
        segment = emission.segment
        if emission.kind == "segment_final":
            self.final_count += 1
            self.finals.append((self.final_count, segment))
            if self.open_segment is not None and self.open_segment.segment_id == segment.segment_id:
                self.open_segment = None
        else:
            self.open_segment = segment

        for session in self.sessions.values():
            if not session.connected or session.kill_reason:
                continue
            msg = segment_message(segment, session.profile)
            if emission.kind == "segment_final":
                self._enqueue_final(session, msg)
                if not session.kill_reason:
                    session.last_acked_final = self.final_count
            else:
                self._enqueue_revision(session, msg)

    def _wake(self, session: ClientSession) -> None:
        for waker in self._wakers:
            waker(session)

    def _enqueue_control(self, session: ClientSession, msg: dict[str, Any]) -> None:
        if msg.get("type") == "ping" and len(session.outbox) >= self.queue_limit:
            return  # pings are elective; never contribute to pressure
        session.outbox.append(msg)
        self._wake(session)

    def _enqueue_revision(self, session: ClientSession, msg: dict[str, Any]) -> None:
        outbox = session.outbox
        if len(outbox) >= self.queue_limit:
            # Full queue: the latest revision of a segment wins; if nothing
            # to coalesce, the ephemeral revision is simply dropped.
            for i in range(len(outbox) - 1, -1, -1):
                queued = outbox[i]
                if (
                    queued.get("type") == "segment"
                    and queued.get("state") == "open"
                    and queued.get("id") == msg["id"]
                ):
                    outbox[i] = msg
                    self._wake(session)
                    return
            session.revisions_dropped += 1
            return
        outbox.append(msg)
        self._wake(session)

    def _enqueue_final(self, session: ClientSession, msg: dict[str, Any]) -> None:
        outbox = session.outbox
        if len(outbox) >= self.queue_limit:
            # Make room by shedding ephemeral revisions, same-segment first.
            for i in range(len(outbox) - 1, -1, -1):
                queued = outbox[i]
                if (
                    queued.get("type") == "segment"
                    and queued.get("state") == "open"
                    and queued.get("id") == msg["id"]
                ):
                    del outbox[i]
                    session.revisions_dropped += 1
                    break
            if len(outbox) >= self.queue_limit:
                for i, queued in enumerate(outbox):
                    if queued.get("type") == "segment" and queued.get("state") == "open":
                        del outbox[i]
                        session.revisions_dropped += 1
                        break
        if len(outbox) >= self.queue_limit:
            # Nothing sheddable left: the client cannot keep up with finals.
            session.kill_reason = "too_slow"
            self._wake(session)
            return
        outbox.append(msg)
        self._wake(session)

    # ------------------------------------------------------------------
    # client frames

    def client_message(self, session: ClientSession, msg: dict[str, Any]) -> None:
        kind = msg.get("type")
        if kind == "prefs":
            self._handle_prefs(session, msg.get("patch"))
        elif kind == "pong":
            pass
        elif kind == "hello":
            self._enqueue_control(
                session, error_message("bad_message", "session already established")
            )
        else:
            self._enqueue_control(session, error_message("bad_message", f"unknown type {kind!r}"))

    def _handle_prefs(self, session: ClientSession, patch: Any) -> None:
        if not isinstance(patch, dict):
            self._enqueue_control(session, error_message("invalid_preference", "patch"))
            return
        try:
            normalized = validate_patch(patch)
        except InvalidPreference as exc:
            self._enqueue_control(session, error_message("invalid_preference", exc.field))
            return
        session.profile = apply_patch(session.profile, normalized)
        self._enqueue_control(
            session, {"type": "prefs_ack", "prefs": session.profile.to_dict()}
        )

    def ping_all(self) -> None:
        for session in self.sessions.values():
            if session.connected and not session.kill_reason:
                self._enqueue_control(session, {"type": "ping"})
