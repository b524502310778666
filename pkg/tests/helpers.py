"""Shared test builders: event constructors and the randomized session
generator used by the equivalence and acceptance suites."""
from __future__ import annotations

import random
import string
from dataclasses import dataclass, field

from capfuse.ingest import IngestEvent, WatermarkBeat
from capfuse.model import CueEvent, CueLabel, TranscriptToken

TONES = ["excited", "concerned", "confused", "urgent", "sarcastic", "calm"]
GESTURES = ["nods", "shrugs", "pointing", "head-shake", "hand-raise"]

WORDS = (
    "the a this that circuit voltage current signal resistor value here now "
    "watch careful note remember safety check measure compare result test "
    "equation graph slope curve magnetic field force energy power wave"
).split()


def tok(seq, text, t0, t1, stability="final", speaker="S1", conf=0.9):
    return IngestEvent(
        "asr", TranscriptToken(seq, text, t0, t1, speaker, stability, conf)
    )


def tone(seq, name, t0, t1, conf):
    return IngestEvent(
        "affect", CueEvent(seq, "tone", CueLabel("tone", name), t0, t1, conf, "affect")
    )


def gesture(seq, name, t0, t1, conf):
    return IngestEvent(
        "gesture",
        CueEvent(seq, "gesture", CueLabel("gesture", name), t0, t1, conf, "gesture"),
    )


def watermark(src, t):
    return IngestEvent(src, WatermarkBeat(src, t))


@dataclass
class GeneratedSession:
    """Per-source ordered event lists plus one merged arrival order."""

    asr: list[IngestEvent] = field(default_factory=list)
    affect: list[IngestEvent] = field(default_factory=list)
    gesture: list[IngestEvent] = field(default_factory=list)

    def interleave(self, rng: random.Random) -> list[IngestEvent]:
        """One arrival order preserving each source's internal order."""
        lanes = [list(self.asr), list(self.affect), list(self.gesture)]
        merged: list[IngestEvent] = []
        while any(lanes):
            nonempty = [i for i, lane in enumerate(lanes) if lane]
            merged.append(lanes[rng.choice(nonempty)].pop(0))
        return merged

    @property
    def total_events(self) -> int:
        return len(self.asr) + len(self.affect) + len(self.gesture)


def _word(rng: random.Random) -> str:
    if rng.random() < 0.7:
        return rng.choice(WORDS)
    return "".join(rng.choice(string.ascii_lowercase) for _ in range(rng.randint(2, 9)))


def _with_beats(
    rng: random.Random, src: str, events: list[IngestEvent], horizon: int
) -> list[IngestEvent]:
    """Insert watermark beats that honor the source's promise: each beat is
    capped at the next event's start time."""
    out: list[IngestEvent] = []
    cursor = 0
    for ev in events:
        limit = ev.time_key
        while cursor < limit and rng.random() < 0.7:
            step = rng.randint(80, 450)
            cursor = min(limit, cursor + step)
            out.append(watermark(src, cursor))
            if cursor >= limit:
                break
        out.append(ev)
        cursor = max(cursor, limit)
    while cursor < horizon:
        cursor = min(horizon, cursor + rng.randint(80, 450))
        out.append(watermark(src, cursor))
    return out


def synthetic_lecture(
    rng: random.Random, duration_ms: int, beat_ms: int = 100
) -> list[IngestEvent]:
    """A paced lecture for latency measurement: utterances with tight
    intra-word gaps (so closures are prompt), cues, and fixed-cadence
    watermark beats on all three sources, merged in event-time order."""
    asr: list[IngestEvent] = []
    affect: list[IngestEvent] = []
    gest: list[IngestEvent] = []
    t = 500
    tok_seq = tone_seq = gest_seq = 1
    while t < duration_ms - 2000:
        utter_start = t
        n_words = rng.randint(2, 8)
        spans = []
        for _ in range(n_words):
            dur = rng.randint(80, 350)
            spans.append((t, t + dur))
            t += dur + rng.randint(0, 200)
        punct = rng.random() < 0.5
        for w, (w0, w1) in enumerate(spans):
            text = _word(rng)
            if punct and w == n_words - 1:
                text += "."
            asr.append(tok(tok_seq, text, w0, w1))
            tok_seq += 1
        if rng.random() < 0.5:
            conf = round(rng.uniform(0.6, 1.0), 2)
            affect.append(tone(tone_seq, rng.choice(TONES), utter_start, spans[-1][1], conf))
            tone_seq += 1
        if rng.random() < 0.3:
            mid = (utter_start + spans[-1][1]) // 2
            gest.append(gesture(gest_seq, rng.choice(GESTURES), mid, mid + 300, 0.8))
            gest_seq += 1
        t += rng.randint(750, 1800)  # boundaries close by punctuation or gap

    events: list[IngestEvent] = asr + affect + gest
    for src in ("asr", "affect", "gesture"):
        events.extend(watermark(src, beat) for beat in range(0, duration_ms, beat_ms))
    events.sort(key=lambda ev: ev.time_key)  # stable: events precede same-time beats
    return events


def generate_session(
    rng: random.Random,
    min_events: int = 50,
    max_events: int = 500,
    partials: bool = True,
) -> GeneratedSession:
    """A randomized scripted lecture: utterances with optional partial
    hypotheses, tone cues (with ties and neutrals), gesture cues (with
    dedup-range repeats), and per-source watermark schedules."""
    target = rng.randint(min_events, max_events)
    asr: list[IngestEvent] = []
    affect: list[IngestEvent] = []
    gest: list[IngestEvent] = []
    t = rng.randint(0, 800)
    tok_seq = tone_seq = gest_seq = 1
    last_tone_t0 = last_gesture_t0 = 0  # keep each cue stream's t_start monotone

    while len(asr) + len(affect) + len(gest) < target:
        utter_start = t
        n_words = rng.randint(1, 10)
        word_spans: list[tuple[int, int]] = []
        for w in range(n_words):
            dur = rng.randint(60, 400)
            word_spans.append((t, t + dur))
            t += dur + rng.randint(0, 250)
        punct = rng.random() < 0.4

        for w, (w0, w1) in enumerate(word_spans):
            text = _word(rng)
            if punct and w == n_words - 1:
                text += rng.choice([".", "?", "!"])
            if partials and rng.random() < 0.25:
                for _ in range(rng.randint(1, 2)):
                    garbled = text.rstrip(".?!")[: max(1, rng.randint(1, len(text)))]
                    garbled = garbled or "x"
                    asr.append(tok(tok_seq, garbled, w0, w1, stability="partial"))
                    tok_seq += 1
            asr.append(tok(tok_seq, text, w0, w1))
            tok_seq += 1

        utter_end = word_spans[-1][1]

        if rng.random() < 0.55:
            name = rng.choice(TONES + ["neutral"])
            c0 = max(0, utter_start - rng.randint(0, 300), last_tone_t0)
            c1 = utter_end + rng.randint(-200, 300)
            if c1 > c0:
                last_tone_t0 = c0
                conf = round(rng.uniform(0.3, 1.0), 2)
                affect.append(tone(tone_seq, name, c0, c1, conf))
                tone_seq += 1
                if rng.random() < 0.15:
                    other = rng.choice([x for x in TONES if x != name])
                    affect.append(tone(tone_seq, other, c0, c1, conf))
                    tone_seq += 1

        if rng.random() < 0.45:
            name = rng.choice(GESTURES)
            g0 = utter_start + rng.randint(0, max(1, utter_end - utter_start))
            g0 = max(g0, last_gesture_t0)
            g1 = g0 + rng.randint(100, 1500)
            conf = round(rng.uniform(0.3, 1.0), 2)
            gest.append(gesture(gest_seq, name, g0, g1, conf))
            gest_seq += 1
            last_gesture_t0 = g0
            if rng.random() < 0.3:
                repeat_gap = rng.randint(50, 2500)
                g0b, g1b = g0 + repeat_gap, g1 + repeat_gap
                gest.append(gesture(gest_seq, name, g0b, g1b, conf))
                gest_seq += 1
                last_gesture_t0 = g0b

        t += rng.randint(100, 2600)

    # Occasionally end mid-word with a trailing partial to exercise promotion.
    if partials and rng.random() < 0.3:
        dur = rng.randint(60, 400)
        asr.append(tok(tok_seq, "trailin", t, t + dur, stability="partial"))
        tok_seq += 1
        t += dur

    horizon = t + 500
    session = GeneratedSession(
        asr=_with_beats(rng, "asr", asr, horizon),
        affect=_with_beats(rng, "affect", affect, horizon),
        gesture=_with_beats(rng, "gesture", gest, horizon),
    )
    return session
