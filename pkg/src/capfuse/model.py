"""Shared domain vocabulary: tokens, cues, segments, annotations.

All timestamps are integer milliseconds since the session epoch. Within one
source stream, event start times are non-decreasing; that ordering is
enforced at the ingest boundary, not here.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Literal

Millis = int

CueKind = Literal["tone", "gesture"]
Stability = Literal["partial", "final"]
SegmentState = Literal["open", "final"]

# Closed label vocabularies. Unknown labels are rejected at the boundary,
# never passed through.
TONE_LABELS: frozenset[str] = frozenset(
    ["neutral", "excited", "concerned", "confused", "urgent", "sarcastic", "calm"]
)
GESTURE_LABELS: frozenset[str] = frozenset(
    ["nods", "shrugs", "pointing", "head-shake", "hand-raise"]
)

# Characters that terminate a caption segment when they end a final token.
TERMINAL_PUNCTUATION = (".", "?", "!")


class UnknownLabel(ValueError):
    """A cue source emitted a label outside the agreed vocabulary."""

    def __init__(self, kind: str, name: str):
        super().__init__(f"unknown {kind} label: {name!r}")
        self.kind = kind
        self.name = name


@dataclass(frozen=True, slots=True)
class CueLabel:
    """A validated member of one of the two closed vocabularies."""

    kind: CueKind
    name: str

    def __post_init__(self):
        vocab = TONE_LABELS if self.kind == "tone" else GESTURE_LABELS
        if self.kind not in ("tone", "gesture") or self.name not in vocab:
            raise UnknownLabel(self.kind, self.name)


def validate_label(kind: str, name: str) -> CueLabel:
    """Return the canonical lowercase label, or raise UnknownLabel.

    Callers that receive UnknownLabel drop the offending event and count it
    in metrics; the vocabulary itself never grows at runtime.
    """
    if kind not in ("tone", "gesture"):
        raise UnknownLabel(kind, name)
    canonical = name.strip().lower()
    vocab = TONE_LABELS if kind == "tone" else GESTURE_LABELS
    if canonical not in vocab:
        raise UnknownLabel(kind, name)
    return CueLabel(kind, canonical)  # type: ignore[arg-type]


@dataclass(frozen=True, slots=True)
class TranscriptToken:
    """One ASR word hypothesis with its time span.

    Token text carries no whitespace at all: rendered captions are built by
    space-joining token texts, and annotation anchors address token
    positions, so embedded whitespace would corrupt both.
    """

    source_seq: int
    text: str
    t_start: Millis
    t_end: Millis
    speaker_id: str
    stability: Stability
    confidence: float

    def __post_init__(self):
        if self.source_seq < 1:
            raise ValueError(f"source_seq must be positive, got {self.source_seq}")
        if not self.text or any(c.isspace() for c in self.text):
            raise ValueError(f"token text must be non-empty without whitespace: {self.text!r}")
        if not (0 <= self.t_start <= self.t_end):
            raise ValueError(f"bad token span [{self.t_start}, {self.t_end}]")
        if not (0.0 <= self.confidence <= 1.0):
            raise ValueError(f"confidence out of range: {self.confidence}")

    @property
    def mid2(self) -> int:
        """Twice the span midpoint, kept integral for exact comparisons."""
        return self.t_start + self.t_end


@dataclass(frozen=True, slots=True)
class CueEvent:
    """One detected non-verbal signal (tone or gesture) with a time span."""

    source_seq: int
    kind: CueKind
    label: CueLabel
    t_start: Millis
    t_end: Millis
    confidence: float
    source_id: str

    def __post_init__(self):
        if self.source_seq < 1:
            raise ValueError(f"source_seq must be positive, got {self.source_seq}")
        if self.label.kind != self.kind:
            raise ValueError(f"label {self.label} does not match cue kind {self.kind}")
        if not (0 <= self.t_start <= self.t_end):
            raise ValueError(f"bad cue span [{self.t_start}, {self.t_end}]")
        if not (0.0 <= self.confidence <= 1.0):
            raise ValueError(f"confidence out of range: {self.confidence}")

    @property
    def mid2(self) -> int:
        return self.t_start + self.t_end

    @property
    def duration(self) -> Millis:
        return self.t_end - self.t_start


@dataclass(frozen=True, slots=True)
class Annotation:
    """A tone or gesture tag bound to a position inside a segment.

    Tone annotations always anchor at token 0 and a segment carries at most
    one of them; gestures anchor at the token nearest the cue midpoint.
    """

    category: CueKind
    label: CueLabel
    anchor: int
    confidence: float
    origin: tuple[int, ...] = field(default=())

    def __post_init__(self):
        if self.category == "tone" and self.anchor != 0:
            raise ValueError("tone annotations anchor at token 0")
        if self.anchor < 0:
            raise ValueError(f"anchor must be non-negative, got {self.anchor}")


@dataclass(frozen=True, slots=True)
class CaptionSegment:
    """A display unit of consecutive tokens plus attached annotations.

    Emitted segments always hold at least one token. A segment moves
    open -> open (revision+1) or open -> final; a final segment is never
    modified again.
    """

    segment_id: str
    tokens: tuple[TranscriptToken, ...]
    annotations: tuple[Annotation, ...]
    t_start: Millis
    t_end: Millis
    state: SegmentState
    revision: int

    def __post_init__(self):
        if not self.tokens:
            raise ValueError("emitted segments carry at least one token")
        if self.revision < 0:
            raise ValueError("revision must be non-negative")
        for ann in self.annotations:
            if ann.anchor >= len(self.tokens):
                raise ValueError(f"annotation anchor {ann.anchor} outside segment")

    @property
    def plain_text(self) -> str:
        return " ".join(tok.text for tok in self.tokens)


def segment_id_for(counter: int) -> str:
    """Render the zero-padded segment id for a 1-based counter value."""
    return f"seg-{counter:06d}"
