"""Headless pipeline: ordered ingest -> fusion -> transcript and metrics.

One Pipeline instance owns the per-source ordering state, the optional
prosody-to-tone adapter, the fusion engine and the metrics collector. The
live server and the replay command both drive it; tests drive it directly.
"""
from __future__ import annotations

import asyncio
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Optional

from .fusion import Emission, FusionConfig, FusionEngine, FusionMetricsHooks
from .ingest import (
    ALL_SOURCES,
    CueEvent,
    IngestEvent,
    ProsodyFrame,
    SourceState,
    TranscriptToken,
    WatermarkBeat,
    check_stream_order,
)
from .metrics import MetricsCollector, MetricsReport
from .model import CaptionSegment
from .prosody import ToneClassifier
from .rendering import transcript_line
from .sessionio import SessionLine, iter_replay, read_session, replay


@dataclass
class PipelineResult:
    finals: list[CaptionSegment]
    transcript: list[str]
    metrics: MetricsReport


class Pipeline:
    """Single-writer processing core shared by replay and live serving."""

    def __init__(
        self,
        config: Optional[FusionConfig] = None,
        clock: Callable[[], float] = time.monotonic,
        wall_of_event_time: Optional[Callable[[int], float]] = None,
    ):
        self.metrics = MetricsCollector()
        hooks = FusionMetricsHooks(
            on_buffer_drop=lambda source: None,
            on_cue_attached=lambda cue: self._count_attached(),
            on_cue_dropped=lambda cue, reason: self._count_dropped(),
        )
        self.engine = FusionEngine(config, clock=clock, metrics=hooks)
        self.states: dict[str, SourceState] = {src: SourceState() for src in ALL_SOURCES}
        self.finals: list[CaptionSegment] = []
        self.transcript: list[str] = []
        self.wall_of_event_time = wall_of_event_time
        self._classifier: Optional[ToneClassifier] = None
        self._scripted_affect_seen = False
        self._on_emission: list[Callable[[Emission], None]] = []

    def subscribe(self, callback: Callable[[Emission], None]) -> None:
        self._on_emission.append(callback)

    def _count_attached(self) -> None:
        self.metrics.cues_attached += 1

    def _count_dropped(self) -> None:
        self.metrics.cues_dropped += 1

    # ------------------------------------------------------------------

    def feed(self, event: IngestEvent) -> bool:
        """Run one event through ordering, adaptation and fusion.

        Returns True when the event was accepted (and so belongs in a
        recording); emissions reach subscribers via callbacks.
        """
        self.metrics.count_in(event.source)
        state = self.states[event.source]

        payload = event.payload
        if isinstance(payload, CueEvent) and event.source == "affect" and self._classifier:
            # The prosody adapter owns the affect stream for this session; a
            # competing scripted source would corrupt its sequence space.
            self.metrics.count_rejected("affect_conflict")
            state.dropped_count += 1
            return False

        reason = check_stream_order(state, event)
        if reason is not None:
            self.metrics.count_rejected(reason)
            return False
        self.metrics.events_accepted += 1

        if isinstance(payload, CueEvent):
            self.metrics.cues_accepted += 1
            if event.source == "affect":
                self._scripted_affect_seen = True

        if isinstance(payload, ProsodyFrame):
            self._feed_prosody(payload)
        elif isinstance(payload, WatermarkBeat) and event.source == "prosody":
            if self._classifier:
                implied = max(0, payload.t - 900)
                self._feed_engine(IngestEvent("affect", WatermarkBeat("affect", implied)))
        else:
            self._feed_engine(event)
        return True

    def advance(self) -> None:
        """Re-run the watermark release outside of event arrival (liveness)."""
        self._handle_emissions(self.engine.advance_watermark())

    def _feed_prosody(self, frame: ProsodyFrame) -> list[Emission]:
        if self._scripted_affect_seen:
            # A scripted affect stream is already live; frames are accepted
            # (they may still be recorded) but do not synthesize cues.
            return []
        if self._classifier is None:
            self._classifier = ToneClassifier()
        emissions: list[Emission] = []
        cue = self._classifier.process(frame)
        if cue is not None:
            self.metrics.cues_accepted += 1
            emissions.extend(self._feed_engine(IngestEvent("affect", cue)))
        beat = WatermarkBeat("affect", self._classifier.watermark_for(frame))
        emissions.extend(self._feed_engine(IngestEvent("affect", beat)))
        return emissions

    def _feed_engine(self, event: IngestEvent) -> list[Emission]:
        emissions = self.engine.process(event)
        self._handle_emissions(emissions)
        return emissions

    def finish(self) -> list[Emission]:
        """End of input: finalize whatever remains open."""
        emissions = self.engine.flush()
        self._handle_emissions(emissions)
        return emissions

    def _handle_emissions(self, emissions: list[Emission]) -> None:
        for em in emissions:
            if em.kind == "segment_final":
                self.finals.append(em.segment)
                self.transcript.append(transcript_line(em.segment))
                self.metrics.segments_final += 1
                if self.wall_of_event_time is not None:
                    mapped = self.wall_of_event_time(em.segment.t_end)
                    self.metrics.record_latency((em.emitted_at - mapped) * 1000.0)
            for cb in self._on_emission:
                cb(em)

    def result(self) -> PipelineResult:
        return PipelineResult(
            finals=list(self.finals),
            transcript=list(self.transcript),
            metrics=self.metrics.snapshot(cues_pending=self.engine.pending_cue_count),
        )


def _usable_events(lines: list[SessionLine], metrics: MetricsCollector) -> list[IngestEvent]:
    events = []
    for line in lines:
        if line.event is None:
            metrics.count_in("invalid")
            metrics.count_rejected("schema")
            continue
        events.append(line.event)
    return events


def run_session_events(
    events: list[IngestEvent], config: Optional[FusionConfig] = None
) -> PipelineResult:
    """Synchronous, unpaced run over an in-memory event sequence (plus the
    terminal watermarks and final flush)."""
    pipeline = Pipeline(config)
    for ev in iter_replay(events):
        pipeline.feed(ev)
    pipeline.finish()
    return pipeline.result()


async def run_replay(
    path: str | Path,
    speed: float = 0.0,
    config: Optional[FusionConfig] = None,
    on_emission: Optional[Callable[[Emission], None]] = None,
) -> PipelineResult:
    """Replay a session file through the full pipeline.

    With speed > 0 finalization latencies are recorded against the mapped
    wall clock; at speed 0 content is identical but latencies are not
    meaningful and stay unrecorded.
    """
    lines = read_session(path)
    loop = asyncio.get_running_loop()
    anchor: dict[str, float] = {}

    def wall_of(t: int) -> float:
        return anchor["start"] + (t - anchor["origin"]) / 1000.0 / speed

    pipeline = Pipeline(
        config,
        clock=loop.time,
        wall_of_event_time=wall_of if speed > 0 else None,
    )
    if on_emission is not None:
        pipeline.subscribe(on_emission)

    events = _usable_events(lines, pipeline.metrics)
    first = True
    async for ev in replay(events, speed):
        if first and speed > 0:
            anchor["start"] = loop.time()
            anchor["origin"] = ev.time_key
            first = False
        pipeline.feed(ev)
    pipeline.finish()
    return pipeline.result()


def replay_file(
    path: str | Path, speed: float = 0.0, config: Optional[FusionConfig] = None
) -> PipelineResult:
    """Blocking wrapper around run_replay."""
    return asyncio.run(run_replay(path, speed=speed, config=config))
