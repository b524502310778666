"""Session files: deterministic replay and verbatim recording.

A session file is the ingest NDJSON format, one event per line, in arrival
order. Replay emits events in file order; at any speed > 0 the wall-clock
gap between consecutive emissions follows the event-time gap divided by
speed, while speed 0 never sleeps. Either way the emitted sequence is
identical, so downstream output cannot depend on pacing.
"""
from __future__ import annotations

import asyncio
from dataclasses import dataclass
from pathlib import Path
from typing import AsyncIterator, Iterable, Iterator, Optional, TextIO

from .ingest import (
    IngestEvent,
    MalformedJson,
    SOURCES,
    UnsupportedVersion,
    WatermarkBeat,
    decode_event,
    encode_event,
)


class SessionFileError(ValueError):
    """A session file could not be used; carries the offending line number."""

    def __init__(self, path: str, line_no: int, cause: Exception):
        super().__init__(f"{path}:{line_no}: {cause}")
        self.path = path
        self.line_no = line_no
        self.cause = cause


@dataclass(frozen=True, slots=True)
class SessionLine:
    line_no: int
    event: Optional[IngestEvent]
    error: Optional[Exception] = None


def read_session(path: str | Path) -> list[SessionLine]:
    """Decode a session file, keeping per-line outcomes.

    Structural poison (malformed JSON, unsupported version) aborts with
    SessionFileError; schema and vocabulary violations are carried as line
    errors so the caller can drop and count them.
    """
    path = Path(path)
    try:
        raw_lines = path.read_text(encoding="utf-8").splitlines()
    except OSError as exc:
        raise SessionFileError(str(path), 0, exc) from exc

    out: list[SessionLine] = []
    for line_no, raw in enumerate(raw_lines, start=1):
        if not raw.strip():
            continue
        try:
            out.append(SessionLine(line_no, decode_event(raw)))
        except (MalformedJson, UnsupportedVersion) as exc:
            raise SessionFileError(str(path), line_no, exc) from exc
        except ValueError as exc:
            out.append(SessionLine(line_no, None, exc))
    return out


def terminal_watermarks(events: Iterable[IngestEvent]) -> list[IngestEvent]:
    """Watermarks that let downstream finalize everything: one per canonical
    source at (max event end time over the whole file) + 1, with 0 as the
    degenerate maximum for an empty file."""
    horizon = 0
    for ev in events:
        horizon = max(horizon, ev.end_time)
    return [IngestEvent(src, WatermarkBeat(src, horizon + 1)) for src in SOURCES]


def iter_replay(events: list[IngestEvent]) -> Iterator[IngestEvent]:
    """File-order events followed by the terminal watermarks."""
    yield from events
    yield from terminal_watermarks(events)


async def replay(
    events: list[IngestEvent],
    speed: float,
    clock: Optional[asyncio.AbstractEventLoop] = None,
) -> AsyncIterator[IngestEvent]:
    """Timed replay. speed 0 means as fast as possible (no sleeping)."""
    if speed < 0:
        raise ValueError("speed must be >= 0")
    loop = clock or asyncio.get_running_loop()
    start_wall: Optional[float] = None
    origin: Optional[int] = None
    deadline = 0.0
    for ev in iter_replay(events):
        if speed > 0:
            if start_wall is None:
                start_wall = loop.time()
                origin = ev.time_key
            # Event-time gaps map to wall time; emission never runs ahead of
            # an earlier event's deadline even if keys interleave downwards.
            target = start_wall + (ev.time_key - origin) / 1000.0 / speed
            deadline = max(deadline, target)
            delay = deadline - loop.time()
            if delay > 0:
                await asyncio.sleep(delay)
        yield ev


class SessionRecorder:
    """Writes accepted ingest events verbatim, in arrival order.

    close() appends terminal watermark lines marking a complete recording; a
    crash or full disk leaves them missing, which flags the file as partial.
    """

    def __init__(self, fp: TextIO):
        self._fp = fp
        self._events: list[IngestEvent] = []
        self.lines_written = 0

    def record(self, event: IngestEvent) -> None:
        self._fp.write(encode_event(event) + "\n")
        self._events.append(event)
        self.lines_written += 1

    def close(self) -> None:
        for beat in terminal_watermarks(self._events):
            self._fp.write(encode_event(beat) + "\n")
            self.lines_written += 1
        self._fp.flush()


def write_session(path: str | Path, events: Iterable[IngestEvent]) -> None:
    with open(path, "w", encoding="utf-8") as fp:
        for ev in events:
            fp.write(encode_event(ev) + "\n")
