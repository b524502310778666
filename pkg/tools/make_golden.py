#!/usr/bin/env python3
"""Build the checked-in golden session and its transcript.

The session is a handcrafted two-speaker-free lecture that exercises every
tone and gesture label, partial->final revision, hysteresis suppression,
tone-conflict tie-breaking, gesture dedup, a neutral cue, and a trailing
partial. The transcript is produced by the offline batch reference, NOT the
streaming engine, so the golden test cross-checks the two paths.

Run from the repository root:  python3 tools/make_golden.py
"""
from __future__ import annotations

import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "tests"))

from helpers import gesture, tok, tone, watermark  # noqa: E402

from capfuse.oracle import batch_transcript  # noqa: E402
from capfuse.sessionio import iter_replay, write_session  # noqa: E402


def build_events():
    asr = []
    affect = []
    gest = []

    # 1. The concerned sentence, with a nod mid-way and a duplicate nod that
    #    must dedup away (midpoints 800 ms apart).
    asr += [
        tok(1, "The", 5230, 5400),
        tok(2, "voltage", 5450, 5900),
        tok(3, "here", 5950, 6200),
        tok(4, "is", 6250, 6400),
        tok(5, "critical.", 6450, 6800),
    ]
    affect.append(tone(1, "concerned", 5200, 6500, 0.81))
    gest.append(gesture(1, "nods", 5900, 6300, 0.85))
    gest.append(gesture(2, "nods", 6500, 6900, 0.85))  # 600 ms later: dedups

    # 2. Partial -> final revision: "Chek" becomes "Check".
    asr += [
        tok(6, "Chek", 8000, 8300, stability="partial"),
        tok(7, "Check", 8000, 8300),
        tok(8, "the", 8350, 8500),
        tok(9, "circuit", 8550, 9100),
        tok(10, "now.", 9150, 9600),
    ]
    gest.append(gesture(3, "pointing", 8500, 9200, 0.9))

    # 3. Tone conflict: excited and urgent with identical confidence and
    #    span; the lexicographic tie-break picks excited.
    asr += [
        tok(11, "This", 11000, 11300),
        tok(12, "is", 11350, 11500),
        tok(13, "very", 11550, 11900),
        tok(14, "exciting", 11950, 12500),
        tok(15, "stuff!", 12550, 13000),
    ]
    affect.append(tone(2, "excited", 11000, 13000, 0.7))
    affect.append(tone(3, "urgent", 11000, 13000, 0.7))

    # 4. Hysteresis: another excited cue 1 s after the previous excited
    #    emission; suppressed.
    asr += [
        tok(16, "More", 14000, 14350),
        tok(17, "excitement", 14400, 15000),
        tok(18, "follows", 15050, 15400),
        tok(19, "here.", 15450, 15800),
    ]
    affect.append(tone(4, "excited", 14000, 15800, 0.9))

    # 5. Urgent, with a head shake.
    asr += [
        tok(20, "Evacuate", 22000, 22600),
        tok(21, "the", 22650, 22800),
        tok(22, "lab", 22850, 23100),
        tok(23, "immediately!", 23150, 23800),
    ]
    affect.append(tone(5, "urgent", 21900, 23900, 0.95))
    gest.append(gesture(4, "head-shake", 22800, 23400, 0.8))

    # 6. Calm, plus a neutral cue that must never render.
    asr += [
        tok(24, "Now", 26000, 26300),
        tok(25, "we", 26350, 26500),
        tok(26, "can", 26550, 26750),
        tok(27, "relax", 26800, 27200),
        tok(28, "again.", 27250, 27500),
    ]
    affect.append(tone(6, "neutral", 25900, 27000, 0.9))
    affect.append(tone(7, "calm", 26000, 27400, 0.8))

    # 7. Confused, with a shrug.
    asr += [
        tok(29, "Wait", 30000, 30300),
        tok(30, "that", 30350, 30600),
        tok(31, "makes", 30650, 30950),
        tok(32, "no", 31000, 31150),
        tok(33, "sense?", 31200, 31600),
    ]
    affect.append(tone(8, "confused", 30000, 31600, 0.85))
    gest.append(gesture(5, "shrugs", 30200, 30800, 0.75))

    # 8. Sarcastic, with a hand raise.
    asr += [
        tok(34, "Oh", 34000, 34200),
        tok(35, "great", 34250, 34600),
        tok(36, "another", 34650, 35100),
        tok(37, "quiz", 35150, 35400),
        tok(38, "today.", 35450, 35800),
    ]
    affect.append(tone(9, "sarcastic", 34000, 35800, 0.9))
    gest.append(gesture(6, "hand-raise", 34500, 35200, 0.9))

    # 9. Trailing partial, never finalized upstream: promoted at the end.
    asr.append(tok(39, "goodby", 36600, 36950, stability="partial"))

    # Watermark beats per source, coarse 1 s cadence.
    def beats(src, limit):
        return [watermark(src, t) for t in range(1000, limit + 1, 1000)]

    events = []
    lanes = {
        "asr": asr + beats("asr", 37000),
        "affect": affect + beats("affect", 37000),
        "gesture": gest + beats("gesture", 37000),
    }
    for lane in lanes.values():
        lane.sort(key=lambda ev: ev.time_key)
    # Deterministic round-robin merge by event time.
    merged = [ev for lane in lanes.values() for ev in lane]
    merged.sort(key=lambda ev: (ev.time_key, ev.source))
    return merged


def main():
    root = Path(__file__).resolve().parent.parent
    data = root / "tests" / "data"
    data.mkdir(parents=True, exist_ok=True)
    events = build_events()
    session_path = data / "golden_session.ndjson"
    write_session(session_path, events)
    lines = batch_transcript(list(iter_replay(events)))
    transcript_path = data / "golden_transcript.txt"
    transcript_path.write_text("".join(line + "\n" for line in lines), encoding="utf-8")
    print(f"wrote {session_path} ({len(events)} events)")
    print(f"wrote {transcript_path} ({len(lines)} lines):")
    for line in lines:
        print("  " + line)


if __name__ == "__main__":
    main()
