"""Ingest boundary: NDJSON event codec and per-source ordering checks.

One event per line, UTF-8, LF-terminated. Three canonical sources (asr,
affect, gesture) carry tokens, cues and watermark beats; an optional fourth
source (prosody) carries fixed-hop feature frames for the built-in tone
heuristic.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Any, Optional, Union

from .model import CueEvent, Millis, TranscriptToken, UnknownLabel, validate_label

WIRE_VERSION = 1

SOURCES = ("asr", "affect", "gesture")
ALL_SOURCES = SOURCES + ("prosody",)

PROSODY_HOP_MS = 100


class IngestError(ValueError):
    """Base for all decode failures."""


class MalformedJson(IngestError):
    pass


class UnsupportedVersion(IngestError):
    pass


class SchemaViolation(IngestError):
    def __init__(self, field: str, reason: str = ""):
        super().__init__(f"schema violation at {field!r}" + (f": {reason}" if reason else ""))
        self.field = field


@dataclass(frozen=True, slots=True)
class WatermarkBeat:
    """A source's promise that no future event starts before t."""

    source: str
    t: Millis


@dataclass(frozen=True, slots=True)
class ProsodyFrame:
    """One 100 ms hop of vocal features feeding the tone heuristic."""

    t: Millis
    rms_energy: float
    f0_mean: float
    f0_var: float
    rate: float


Payload = Union[TranscriptToken, CueEvent, WatermarkBeat, ProsodyFrame]


@dataclass(frozen=True, slots=True)
class IngestEvent:
    source: str
    payload: Payload

    @property
    def time_key(self) -> Millis:
        """The event-time used for replay pacing and terminal watermarks."""
        p = self.payload
        if isinstance(p, (TranscriptToken, CueEvent)):
            return p.t_start
        return p.t

    @property
    def end_time(self) -> Millis:
        p = self.payload
        if isinstance(p, (TranscriptToken, CueEvent)):
            return p.t_end
        return p.t


def _require(obj: dict[str, Any], field: str) -> Any:
    if field not in obj:
        raise SchemaViolation(field, "missing")
    return obj[field]


def _int_field(obj: dict[str, Any], field: str, minimum: int = 0) -> int:
    value = _require(obj, field)
    if isinstance(value, bool) or not isinstance(value, int):
        raise SchemaViolation(field, "expected an integer")
    if value < minimum:
        raise SchemaViolation(field, f"must be >= {minimum}")
    return value


def _num_field(obj: dict[str, Any], field: str, lo: float, hi: float = math.inf) -> float:
    value = _require(obj, field)
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise SchemaViolation(field, "expected a number")
    value = float(value)
    if not math.isfinite(value) or not (lo <= value <= hi):
        raise SchemaViolation(field, "out of range")
    return value


def _str_field(obj: dict[str, Any], field: str, max_len: int = 64) -> str:
    value = _require(obj, field)
    if not isinstance(value, str) or len(value) > max_len:
        raise SchemaViolation(field, f"expected a string of <= {max_len} chars")
    return value


def decode_event(line: Union[bytes, str]) -> IngestEvent:
    """Parse and validate one NDJSON line into an IngestEvent.

    Raises MalformedJson, UnsupportedVersion, SchemaViolation or
    UnknownLabel; ordering is the caller's concern (check_stream_order).
    """
    if isinstance(line, bytes):
        try:
            line = line.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise MalformedJson(f"not UTF-8: {exc}") from exc
    try:
        obj = json.loads(line)
    except json.JSONDecodeError as exc:
        raise MalformedJson(str(exc)) from exc
    if not isinstance(obj, dict):
        raise MalformedJson("line is not a JSON object")

    version = _require(obj, "v")
    if version != WIRE_VERSION:
        raise UnsupportedVersion(f"unsupported wire version: {version!r}")

    src = _str_field(obj, "src")
    if src not in ALL_SOURCES:
        raise SchemaViolation("src", f"unknown source {src!r}")
    kind = _str_field(obj, "type")

    if kind == "watermark":
        return IngestEvent(src, WatermarkBeat(src, _int_field(obj, "t")))

    if kind == "token":
        if src != "asr":
            raise SchemaViolation("type", "tokens only arrive on the asr source")
        t0 = _int_field(obj, "t0")
        t1 = _int_field(obj, "t1")
        if t1 < t0:
            raise SchemaViolation("t1", "t1 < t0")
        text = _str_field(obj, "text", max_len=256)
        if not text or text != text.strip() or any(c.isspace() for c in text):
            raise SchemaViolation("text", "must be non-empty without whitespace")
        stability = _str_field(obj, "stability")
        if stability not in ("partial", "final"):
            raise SchemaViolation("stability", f"got {stability!r}")
        token = TranscriptToken(
            source_seq=_int_field(obj, "seq", minimum=1),
            text=text,
            t_start=t0,
            t_end=t1,
            speaker_id=_str_field(obj, "speaker"),
            stability=stability,  # type: ignore[arg-type]
            confidence=_num_field(obj, "conf", 0.0, 1.0),
        )
        return IngestEvent(src, token)

    if kind == "cue":
        if src not in ("affect", "gesture"):
            raise SchemaViolation("type", "cues only arrive on affect/gesture sources")
        cue_kind = _str_field(obj, "kind")
        expected = "tone" if src == "affect" else "gesture"
        if cue_kind != expected:
            raise SchemaViolation("kind", f"{src} source carries only {expected} cues")
        t0 = _int_field(obj, "t0")
        t1 = _int_field(obj, "t1")
        if t1 < t0:
            raise SchemaViolation("t1", "t1 < t0")
        label = validate_label(cue_kind, _str_field(obj, "label"))
        cue = CueEvent(
            source_seq=_int_field(obj, "seq", minimum=1),
            kind=cue_kind,  # type: ignore[arg-type]
            label=label,
            t_start=t0,
            t_end=t1,
            confidence=_num_field(obj, "conf", 0.0, 1.0),
            source_id=src,
        )
        return IngestEvent(src, cue)

    if kind == "frame":
        if src != "prosody":
            raise SchemaViolation("type", "frames only arrive on the prosody source")
        frame = ProsodyFrame(
            t=_int_field(obj, "t"),
            rms_energy=_num_field(obj, "rms", 0.0, 1.0),
            f0_mean=_num_field(obj, "f0m", 0.0),
            f0_var=_num_field(obj, "f0v", 0.0),
            rate=_num_field(obj, "rate", 0.0),
        )
        return IngestEvent(src, frame)

    raise SchemaViolation("type", f"unknown event type {kind!r}")


def encode_event(event: IngestEvent) -> str:
    """Serialize an IngestEvent back to its single NDJSON line (no newline)."""
    p = event.payload
    if isinstance(p, TranscriptToken):
        obj: dict[str, Any] = {
            "v": WIRE_VERSION,
            "src": event.source,
            "type": "token",
            "seq": p.source_seq,
            "t0": p.t_start,
            "t1": p.t_end,
            "text": p.text,
            "speaker": p.speaker_id,
            "stability": p.stability,
            "conf": p.confidence,
        }
    elif isinstance(p, CueEvent):
        obj = {
            "v": WIRE_VERSION,
            "src": event.source,
            "type": "cue",
            "seq": p.source_seq,
            "t0": p.t_start,
            "t1": p.t_end,
            "kind": p.kind,
            "label": p.label.name,
            "conf": p.confidence,
        }
    elif isinstance(p, WatermarkBeat):
        obj = {"v": WIRE_VERSION, "src": event.source, "type": "watermark", "t": p.t}
    elif isinstance(p, ProsodyFrame):
        obj = {
            "v": WIRE_VERSION,
            "src": event.source,
            "type": "frame",
            "t": p.t,
            "rms": p.rms_energy,
            "f0m": p.f0_mean,
            "f0v": p.f0_var,
            "rate": p.rate,
        }
    else:
        raise TypeError(f"cannot encode payload of type {type(p).__name__}")
    return json.dumps(obj, separators=(",", ":"))


@dataclass
class SourceState:
    """Per-source ordering state at the ingest boundary."""

    last_seq: int = 0
    last_t: Millis = 0
    dropped_count: int = 0
    watermark: Millis = 0
    frames_seen: int = 0


def check_stream_order(state: SourceState, event: IngestEvent) -> Optional[str]:
    """Accept or reject one decoded event against its source's state.

    Returns None on accept (state updated) or a short reject reason (state's
    dropped_count incremented). Tokens and cues must arrive with contiguous
    sequence numbers, non-decreasing start times, and never behind the
    source's own watermark. Watermark beats must not regress.
    """
    p = event.payload
    if isinstance(p, WatermarkBeat):
        if p.t < state.watermark:
            state.dropped_count += 1
            return "watermark_regress"
        state.watermark = p.t
        return None
    if isinstance(p, ProsodyFrame):
        if state.frames_seen and p.t <= state.last_t:
            state.dropped_count += 1
            return "time_regress"
        if p.t < state.watermark:
            state.dropped_count += 1
            return "late"
        state.last_t = p.t
        state.frames_seen += 1
        return None

    seq = p.source_seq
    if seq != state.last_seq + 1:
        state.dropped_count += 1
        return "seq_gap"
    if p.t_start < state.last_t:
        state.dropped_count += 1
        return "time_regress"
    if p.t_start < state.watermark:
        state.dropped_count += 1
        return "late"
    state.last_seq = seq
    state.last_t = p.t_start
    return None
