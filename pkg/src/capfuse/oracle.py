"""Offline batch reference for the streaming engine.

Given the complete accepted event sequences of a finished session, compute
the finalized segments in one deterministic pass: sort, resolve partial
hypotheses, segment, then attach cues. Written independently of the
streaming engine on purpose; equivalence between the two is a test target,
so this module must not import from fusion internals beyond the config.
"""
from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from typing import Iterable, Optional

from .fusion import FusionConfig
from .ingest import IngestEvent
from .model import (
    Annotation,
    CaptionSegment,
    CueEvent,
    TERMINAL_PUNCTUATION,
    TranscriptToken,
    segment_id_for,
)
from .rendering import transcript_line


def _overlap(a_start: int, a_end: int, b_start: int, b_end: int) -> bool:
    if a_start == b_start and a_end == b_end:
        return True
    return max(a_start, b_start) < min(a_end, b_end)


def _surviving_tokens(tokens: Iterable[TranscriptToken]) -> list[TranscriptToken]:
    """Resolve hypothesis replacement: in arrival order, a newer token kills
    every earlier partial whose span it overlaps."""
    survivors: list[TranscriptToken] = []
    for tok in tokens:
        survivors = [
            prev
            for prev in survivors
            if not (
                prev.stability == "partial"
                and _overlap(prev.t_start, prev.t_end, tok.t_start, tok.t_end)
            )
        ]
        survivors.append(tok)
    return survivors


@dataclass
class _Draft:
    tokens: list[TranscriptToken] = field(default_factory=list)
    annotations: list[Annotation] = field(default_factory=list)

    @property
    def t_start(self) -> int:
        return self.tokens[0].t_start

    @property
    def t_end(self) -> int:
        return max(t.t_end for t in self.tokens)

    @property
    def char_len(self) -> int:
        return sum(len(t.text) for t in self.tokens) + len(self.tokens) - 1


def _build_segments(tokens: list[TranscriptToken], cfg: FusionConfig) -> list[_Draft]:
    segments: list[_Draft] = []
    current: Optional[_Draft] = None
    for tok in tokens:
        if current is not None:
            if tok.stability == "final":
                close = (
                    tok.t_start - current.t_end >= cfg.gap_ms
                    or current.tokens[-1].text.endswith(TERMINAL_PUNCTUATION)
                    or len(current.tokens) + 1 > cfg.max_tokens
                    or current.char_len + 1 + len(tok.text) > cfg.max_chars
                )
            else:
                close = tok.t_start - current.t_end >= cfg.gap_ms
            if close:
                segments.append(current)
                current = None
        if current is None:
            current = _Draft()
        current.tokens.append(tok)
        if tok.stability == "final" and tok.text.endswith(TERMINAL_PUNCTUATION):
            segments.append(current)
            current = None
    if current is not None:
        segments.append(current)
    return segments


def _attach_all(segments: list[_Draft], cues: list[CueEvent], cfg: FusionConfig) -> None:
    consumed: set[int] = set()  # indices into cues
    last_tone: Optional[tuple[str, int]] = None  # (label, segment end)
    last_gesture_mid2: dict[str, int] = {}

    tone_idx = [i for i, c in enumerate(cues) if c.kind == "tone"]
    gesture_idx = [i for i, c in enumerate(cues) if c.kind == "gesture"]

    for seg in segments:
        s, e = seg.t_start, seg.t_end

        best: Optional[int] = None
        for i in tone_idx:
            if i in consumed:
                continue
            cue = cues[i]
            if cue.label.name == "neutral" or cue.confidence < cfg.tone_conf_min:
                continue
            ov = min(e, cue.t_end) - max(s, cue.t_start)
            need = max(cfg.overlap_min_frac * cue.duration, cfg.overlap_min_ms)
            contained = cue.duration < cfg.overlap_min_ms and cue.t_start >= s and cue.t_end <= e
            if not (ov >= need or contained):
                continue
            if best is None or (
                (-cue.confidence, cue.t_start, cue.label.name, cue.source_seq)
                < (-cues[best].confidence, cues[best].t_start, cues[best].label.name, cues[best].source_seq)
            ):
                best = i
        if best is not None:
            cue = cues[best]
            if not (
                last_tone is not None
                and last_tone[0] == cue.label.name
                and s - last_tone[1] < cfg.tone_repeat_suppress_ms
            ):
                seg.annotations.append(
                    Annotation("tone", cue.label, 0, cue.confidence, (cue.source_seq,))
                )
                last_tone = (cue.label.name, e)
                consumed.add(best)

        hits = sorted(
            (i for i in gesture_idx if i not in consumed and s * 2 <= cues[i].mid2 <= e * 2),
            key=lambda i: (cues[i].t_start, cues[i].source_seq),
        )
        for i in hits:
            cue = cues[i]
            prev = last_gesture_mid2.get(cue.label.name)
            if prev is not None and abs(cue.mid2 - prev) < 2 * cfg.gesture_dedup_ms:
                consumed.add(i)
                continue
            anchor = min(
                range(len(seg.tokens)),
                key=lambda k: (abs(seg.tokens[k].mid2 - cue.mid2), k),
            )
            seg.annotations.append(
                Annotation("gesture", cue.label, anchor, cue.confidence, (cue.source_seq,))
            )
            last_gesture_mid2[cue.label.name] = cue.mid2
            consumed.add(i)

        # Expired cues can never match a later segment; consuming them here
        # mirrors the streaming pending-set cleanup.
        for i in tone_idx + gesture_idx:
            if i not in consumed and cues[i].t_end < s:
                consumed.add(i)


def batch_finalize(events: Iterable[IngestEvent], config: Optional[FusionConfig] = None) -> list[CaptionSegment]:
    """Compute the finalized segments a complete session must produce."""
    cfg = config or FusionConfig()
    tokens: list[TranscriptToken] = []
    cues: list[CueEvent] = []
    for ev in events:
        if isinstance(ev.payload, TranscriptToken):
            tokens.append(ev.payload)
        elif isinstance(ev.payload, CueEvent):
            cues.append(ev.payload)

    survivors = _surviving_tokens(tokens)
    survivors.sort(key=lambda t: (t.t_start, t.source_seq))
    drafts = _build_segments(survivors, cfg)
    _attach_all(drafts, cues, cfg)

    finals: list[CaptionSegment] = []
    for n, draft in enumerate(drafts, start=1):
        finals.append(
            CaptionSegment(
                segment_id=segment_id_for(n),
                tokens=tuple(
                    t if t.stability == "final" else _promote(t) for t in draft.tokens
                ),
                annotations=tuple(draft.annotations),
                t_start=draft.t_start,
                t_end=draft.t_end,
                state="final",
                revision=0,
            )
        )
    return finals


def _promote(tok: TranscriptToken) -> TranscriptToken:
    return dataclasses.replace(tok, stability="final")


def batch_transcript(events: Iterable[IngestEvent], config: Optional[FusionConfig] = None) -> list[str]:
    """Golden-transcript lines (verbose rendering) for a complete session."""
    return [transcript_line(seg) for seg in batch_finalize(events, config)]
