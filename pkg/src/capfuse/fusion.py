"""The fusion core: event-time merge of token and cue streams under a
combined watermark, caption segmentation, and cue attachment.

The engine is a single-writer state machine. Events are handed in via
ingest_event (no emissions there); advance_watermark releases work and
returns emissions. Determinism contract: the sequence of finalized
segments depends only on the accepted per-source event sequences, never on
how they interleave in arrival or on watermark beat timing, provided every
source's watermark promise holds.
"""
from __future__ import annotations

import dataclasses
import logging
import time
from collections import deque
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Deque, Literal, Optional

try:
    import tomllib  # Python >= 3.11
except ModuleNotFoundError:  # pragma: no cover
    import tomli as tomllib  # type: ignore[no-redef]

from .ingest import SOURCES, IngestEvent, ProsodyFrame, WatermarkBeat
from .model import (
    Annotation,
    CaptionSegment,
    CueEvent,
    Millis,
    TERMINAL_PUNCTUATION,
    TranscriptToken,
    segment_id_for,
)

log = logging.getLogger(__name__)

BUFFER_LIMIT = 10_000  # per-source; beyond this the oldest events are dropped

EmissionKind = Literal["segment_open", "segment_revised", "segment_final"]


@dataclass(frozen=True, slots=True)
class FusionConfig:
    gap_ms: Millis = 700
    max_tokens: int = 12
    max_chars: int = 60
    grace_ms: Millis = 250
    tone_conf_min: float = 0.6
    overlap_min_frac: float = 0.5
    overlap_min_ms: Millis = 300
    tone_repeat_suppress_ms: Millis = 5000
    gesture_dedup_ms: Millis = 1000

    def __post_init__(self):
        for name in (
            "gap_ms",
            "max_tokens",
            "max_chars",
            "grace_ms",
            "tone_conf_min",
            "overlap_min_ms",
            "tone_repeat_suppress_ms",
            "gesture_dedup_ms",
        ):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if not (0.0 < self.overlap_min_frac <= 1.0):
            raise ValueError("overlap_min_frac must be in (0, 1]")


class ConfigError(ValueError):
    """The fusion config file is unreadable or invalid."""


def load_config(path: str | Path) -> FusionConfig:
    """Load FusionConfig from a TOML file with a [fusion] table.

    Key names match the FusionConfig field names exactly; missing keys keep
    their defaults, unknown keys are errors.
    """
    path = Path(path)
    try:
        data = tomllib.loads(path.read_text(encoding="utf-8"))
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from exc
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"invalid TOML in {path}: {exc}") from exc
    table = data.get("fusion", {})
    if not isinstance(table, dict):
        raise ConfigError(f"[fusion] must be a table in {path}")
    known = {f.name for f in dataclasses.fields(FusionConfig)}
    unknown = set(table) - known
    if unknown:
        raise ConfigError(f"unknown [fusion] keys in {path}: {sorted(unknown)}")
    try:
        return FusionConfig(**table)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad [fusion] values in {path}: {exc}") from exc


@dataclass(frozen=True, slots=True)
class Emission:
    kind: EmissionKind
    segment: CaptionSegment
    emitted_at: float  # wall clock (monotonic seconds), for metrics only


def spans_overlap(s1: Millis, e1: Millis, s2: Millis, e2: Millis) -> bool:
    """Positive-length intersection, or identical degenerate spans."""
    return max(s1, s2) < min(e1, e2) or (s1 == s2 and e1 == e2)


class _OpenSegment:
    """Mutable builder for the segment currently accepting tokens."""

    __slots__ = ("segment_id", "tokens", "closed", "last_emitted_revision")

    def __init__(self, segment_id: str):
        self.segment_id = segment_id
        self.tokens: list[TranscriptToken] = []
        self.closed = False
        self.last_emitted_revision: Optional[int] = None

    @property
    def t_start(self) -> Millis:
        return self.tokens[0].t_start

    @property
    def t_end(self) -> Millis:
        return max(tok.t_end for tok in self.tokens)

    @property
    def char_len(self) -> int:
        return sum(len(tok.text) for tok in self.tokens) + max(0, len(self.tokens) - 1)

    def next_revision(self) -> int:
        rev = 0 if self.last_emitted_revision is None else self.last_emitted_revision + 1
        self.last_emitted_revision = rev
        return rev

    def snapshot(self, state: Literal["open", "final"], revision: int,
                 annotations: tuple[Annotation, ...] = ()) -> CaptionSegment:
        return CaptionSegment(
            segment_id=self.segment_id,
            tokens=tuple(self.tokens),
            annotations=annotations,
            t_start=self.t_start,
            t_end=self.t_end,
            state=state,
            revision=revision,
        )


@dataclass
class FusionMetricsHooks:
    """Counters the engine feeds; wired to the metrics pipeline by callers."""

    on_buffer_drop: Callable[[str], None] = lambda source: None
    on_cue_attached: Callable[[CueEvent], None] = lambda cue: None
    on_cue_dropped: Callable[[CueEvent, str], None] = lambda cue, reason: None


@dataclass
class _ToneMemory:
    label: str
    segment_end: Millis


class FusionEngine:
    """Merges accepted events into finalized caption segments.

    Tokens buffer per source and are released in sequence order once the
    buffer head's t_end is behind the fusion watermark (the minimum over all
    source watermarks). Cues go straight to the pending set: attachment only
    happens at finalization, which itself waits for the watermark to pass
    the segment end plus grace, by which point every cue that could attach
    has arrived.
    """

    def __init__(
        self,
        config: Optional[FusionConfig] = None,
        clock: Callable[[], float] = time.monotonic,
        metrics: Optional[FusionMetricsHooks] = None,
    ):
        self.config = config or FusionConfig()
        self.clock = clock
        self.metrics = metrics or FusionMetricsHooks()
        self.watermarks: dict[str, Millis] = {src: 0 for src in SOURCES}
        self.fusion_watermark: Millis = 0
        self._tokens: Deque[TranscriptToken] = deque()
        self._buffered_partials = 0
        self._pending_tones: Deque[CueEvent] = deque()
        self._pending_gestures: Deque[CueEvent] = deque()
        self._open: Optional[_OpenSegment] = None
        self._closing: Deque[_OpenSegment] = deque()
        self._segment_counter = 0
        self._last_tone: Optional[_ToneMemory] = None
        self._last_gesture_mid2: dict[str, int] = {}

    # ------------------------------------------------------------------
    # ingest side

    def ingest_event(self, event: IngestEvent) -> bool:
        """Buffer one accepted event. Returns True if a watermark moved.

        No emissions happen here; call advance_watermark afterwards.
        """
        p = event.payload
        if isinstance(p, WatermarkBeat):
            # Only the registered merge sources gate the fused watermark;
            # prosody beats are translated to affect beats upstream.
            if p.source in self.watermarks and p.t > self.watermarks[p.source]:
                self.watermarks[p.source] = p.t
                return True
            return False
        if isinstance(p, TranscriptToken):
            self._buffer_token(p)
            return False
        if isinstance(p, CueEvent):
            self._buffer_cue(p)
            return False
        if isinstance(p, ProsodyFrame):
            # Frames are consumed upstream by the tone classifier; the engine
            # itself has no use for them.
            return False
        raise TypeError(f"unexpected payload: {type(p).__name__}")

    def _buffer_token(self, token: TranscriptToken) -> None:
        # A newer hypothesis replaces any still-buffered partials it overlaps.
        if self._buffered_partials:
            kept: list[TranscriptToken] = []
            for tok in self._tokens:
                if tok.stability == "partial" and spans_overlap(
                    tok.t_start, tok.t_end, token.t_start, token.t_end
                ):
                    self._buffered_partials -= 1
                    continue
                kept.append(tok)
            if len(kept) != len(self._tokens):
                self._tokens = deque(kept)
        self._tokens.append(token)
        if token.stability == "partial":
            self._buffered_partials += 1
        if len(self._tokens) > BUFFER_LIMIT:
            dropped = self._tokens.popleft()
            if dropped.stability == "partial":
                self._buffered_partials -= 1
            self.metrics.on_buffer_drop("asr")
            log.warning("token buffer overflow; dropped seq %d", dropped.source_seq)

    def _buffer_cue(self, cue: CueEvent) -> None:
        pending = self._pending_tones if cue.kind == "tone" else self._pending_gestures
        pending.append(cue)
        if len(pending) > BUFFER_LIMIT:
            dropped = pending.popleft()
            self.metrics.on_buffer_drop(cue.source_id)
            self.metrics.on_cue_dropped(dropped, "overflow")
            log.warning("cue buffer overflow; dropped seq %d", dropped.source_seq)

    # ------------------------------------------------------------------
    # watermark side

    def advance_watermark(self) -> list[Emission]:
        """Release eligible work behind the fused watermark and emit."""
        self.fusion_watermark = min(self.watermarks.values())
        emissions: list[Emission] = []

        while self._tokens and self._tokens[0].t_end <= self.fusion_watermark:
            self._apply_token(self._tokens.popleft(), emissions)

        # Silence closure: once no buffered or future token can join the open
        # segment without tripping the gap rule, the segment is complete.
        seg = self._open
        if (
            seg is not None
            and not seg.closed
            and self.fusion_watermark >= seg.t_end + self.config.gap_ms
            and (not self._tokens or self._tokens[0].t_start >= seg.t_end + self.config.gap_ms)
        ):
            self._close_open()

        while self._closing and self.fusion_watermark >= self._closing[0].t_end + self.config.grace_ms:
            emissions.append(self._finalize(self._closing.popleft()))
        return emissions

    def process(self, event: IngestEvent) -> list[Emission]:
        """Convenience: ingest one event and advance."""
        self.ingest_event(event)
        return self.advance_watermark()

    def flush(self) -> list[Emission]:
        """End of session: drain buffers and finalize everything.

        Used at replay end (terminal watermarks release all events but
        cannot satisfy the grace guard for the last segment) and on server
        shutdown, where open speech must still reach viewers as finals.
        """
        emissions: list[Emission] = []
        while self._tokens:
            self._apply_token(self._tokens.popleft(), emissions)
        if self._open is not None:
            self._close_open()
        while self._closing:
            emissions.append(self._finalize(self._closing.popleft()))
        return emissions

    # ------------------------------------------------------------------
    # segmentation

    def _new_segment(self) -> _OpenSegment:
        self._segment_counter += 1
        return _OpenSegment(segment_id_for(self._segment_counter))

    def _close_open(self) -> None:
        seg = self._open
        assert seg is not None and seg.tokens
        seg.closed = True
        self._closing.append(seg)
        self._open = None

    def _apply_token(self, token: TranscriptToken, emissions: list[Emission]) -> None:
        seg = self._open
        if seg is not None:
            # Replacement precedes segmentation: a newer hypothesis supersedes
            # any open partials it overlaps, wherever they sit in the segment.
            survivors = [
                tok
                for tok in seg.tokens
                if not (
                    tok.stability == "partial"
                    and spans_overlap(tok.t_start, tok.t_end, token.t_start, token.t_end)
                )
            ]
            if len(survivors) != len(seg.tokens):
                seg.tokens = survivors

        if seg is not None and seg.tokens:
            if token.stability == "final":
                if self._should_close_before(seg, token):
                    self._close_open()
                    seg = None
            else:
                # Partials never trigger punctuation or length closure, but a
                # partial past the silence gap belongs to the next utterance.
                if token.t_start - seg.t_end >= self.config.gap_ms:
                    self._close_open()
                    seg = None
        elif seg is not None and not seg.tokens:
            pass  # replacement emptied it; the incoming token re-fills it

        created = False
        if seg is None:
            seg = self._new_segment()
            self._open = seg
            created = True
        seg.tokens.append(token)

        kind: EmissionKind = "segment_open" if created else "segment_revised"
        emissions.append(
            Emission(kind, seg.snapshot("open", seg.next_revision()), self.clock())
        )

        if token.stability == "final" and token.text.endswith(TERMINAL_PUNCTUATION):
            self._close_open()

    def _should_close_before(self, seg: _OpenSegment, token: TranscriptToken) -> bool:
        last = seg.tokens[-1]
        if token.t_start - seg.t_end >= self.config.gap_ms:
            return True
        if last.text.endswith(TERMINAL_PUNCTUATION):
            return True
        if len(seg.tokens) + 1 > self.config.max_tokens:
            return True
        if seg.char_len + 1 + len(token.text) > self.config.max_chars:
            return True
        return False

    # ------------------------------------------------------------------
    # finalization and cue attachment

    def _finalize(self, seg: _OpenSegment) -> Emission:
        annotations = self._attach_cues(seg)
        seg.tokens = [
            dataclasses.replace(tok, stability="final") if tok.stability == "partial" else tok
            for tok in seg.tokens
        ]
        snapshot = seg.snapshot("final", seg.next_revision(), annotations)
        return Emission("segment_final", snapshot, self.clock())

    def _tone_candidate(self, cue: CueEvent, seg_start: Millis, seg_end: Millis) -> bool:
        if cue.label.name == "neutral":
            return False
        if cue.confidence < self.config.tone_conf_min:
            return False
        overlap = min(seg_end, cue.t_end) - max(seg_start, cue.t_start)
        needed = max(self.config.overlap_min_frac * cue.duration, self.config.overlap_min_ms)
        if overlap >= needed:
            return True
        # Short cues can never reach the absolute floor; full containment
        # inside the segment span stands in for it.
        return (
            cue.duration < self.config.overlap_min_ms
            and cue.t_start >= seg_start
            and cue.t_end <= seg_end
        )

    def _attach_cues(self, seg: _OpenSegment) -> tuple[Annotation, ...]:
        seg_start, seg_end = seg.t_start, seg.t_end
        annotations: list[Annotation] = []

        candidates = [
            cue for cue in self._pending_tones if self._tone_candidate(cue, seg_start, seg_end)
        ]
        if candidates:
            winner = min(
                candidates,
                key=lambda c: (-c.confidence, c.t_start, c.label.name, c.source_seq),
            )
            suppressed = (
                self._last_tone is not None
                and self._last_tone.label == winner.label.name
                and seg_start - self._last_tone.segment_end
                < self.config.tone_repeat_suppress_ms
            )
            if suppressed:
                log.debug(
                    "hysteresis suppressed tone %s on %s", winner.label.name, seg.segment_id
                )
            else:
                annotations.append(
                    Annotation(
                        category="tone",
                        label=winner.label,
                        anchor=0,
                        confidence=winner.confidence,
                        origin=(winner.source_seq,),
                    )
                )
                self._last_tone = _ToneMemory(winner.label.name, seg_end)
                self.metrics.on_cue_attached(winner)
                self._pending_tones.remove(winner)

        gesture_hits = sorted(
            (c for c in self._pending_gestures if seg_start * 2 <= c.mid2 <= seg_end * 2),
            key=lambda c: (c.t_start, c.source_seq),
        )
        for cue in gesture_hits:
            last_mid2 = self._last_gesture_mid2.get(cue.label.name)
            if last_mid2 is not None and abs(cue.mid2 - last_mid2) < 2 * self.config.gesture_dedup_ms:
                self._pending_gestures.remove(cue)
                self.metrics.on_cue_dropped(cue, "gesture_dedup")
                continue
            anchor = min(
                range(len(seg.tokens)),
                key=lambda i: (abs(seg.tokens[i].mid2 - cue.mid2), i),
            )
            annotations.append(
                Annotation(
                    category="gesture",
                    label=cue.label,
                    anchor=anchor,
                    confidence=cue.confidence,
                    origin=(cue.source_seq,),
                )
            )
            self._last_gesture_mid2[cue.label.name] = cue.mid2
            self.metrics.on_cue_attached(cue)
            self._pending_gestures.remove(cue)

        # Cues that ended before this segment began can never match a later
        # one; expire them now.
        for pending in (self._pending_tones, self._pending_gestures):
            expired = [c for c in pending if c.t_end < seg_start]
            for cue in expired:
                pending.remove(cue)
                self.metrics.on_cue_dropped(cue, "expired")

        return tuple(annotations)

    # ------------------------------------------------------------------
    # introspection (delivery snapshots, tests)

    @property
    def open_segment(self) -> Optional[CaptionSegment]:
        seg = self._open
        if seg is None or not seg.tokens:
            return None
        rev = seg.last_emitted_revision if seg.last_emitted_revision is not None else 0
        return seg.snapshot("open", rev)

    @property
    def pending_cue_count(self) -> int:
        return len(self._pending_tones) + len(self._pending_gestures)
