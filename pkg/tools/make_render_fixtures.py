#!/usr/bin/env python3
"""Build fixtures/render_cases.json, the shared render-conformance corpus.

Each case carries the wire-visible inputs a display client has (plain text,
structured annotations, a preference profile) plus the engine's rendered
output. Both test suites assert exact string equality against `expected`.

Run from the repository root:  python3 tools/make_render_fixtures.py
"""
from __future__ import annotations

import json
from pathlib import Path

from capfuse.model import Annotation, CaptionSegment, CueLabel, TranscriptToken
from capfuse.preferences import PreferenceProfile
from capfuse.rendering import render_segment_text
from capfuse.tags import renderable_labels


def segment_from_plain(plain: str, annotations):
    words = plain.split(" ")
    tokens = []
    t = 0
    for i, word in enumerate(words):
        tokens.append(TranscriptToken(i + 1, word, t, t + 200, "S1", "final", 0.9))
        t += 250
    return CaptionSegment(
        "seg-000001", tuple(tokens), tuple(annotations),
        tokens[0].t_start, tokens[-1].t_end, "final", 0,
    )


def build_cases():
    cases = []

    def add(plain, annotations, profile):
        segment = segment_from_plain(plain, annotations)
        cases.append(
            {
                "plain": plain,
                "annotations": [
                    {"cat": a.category, "label": a.label.name, "anchor": a.anchor, "conf": a.confidence}
                    for a in annotations
                ],
                "profile": profile.to_dict(),
                "expected": render_segment_text(segment, profile),
            }
        )

    def tone(name, conf=0.8):
        return Annotation("tone", CueLabel("tone", name), 0, conf)

    def gest(name, anchor, conf=0.8):
        return Annotation("gesture", CueLabel("gesture", name), anchor, conf)

    # Every renderable label, both verbosities, as the sole annotation.
    for label in renderable_labels():
        ann = tone(label.name) if label.kind == "tone" else gest(label.name, 1)
        for verbosity in ("minimal", "verbose"):
            add("the value matters here", [ann], PreferenceProfile(verbosity=verbosity))

    # The flagship sentence under several profiles.
    sentence = "The voltage here is critical."
    anns = [tone("concerned", 0.81), gest("nods", 2, 0.85)]
    for profile in (
        PreferenceProfile(verbosity="minimal"),
        PreferenceProfile(verbosity="verbose"),
        PreferenceProfile(verbosity="off"),
        PreferenceProfile(verbosity="verbose", show_tone=False),
        PreferenceProfile(verbosity="verbose", show_gestures=False),
        PreferenceProfile(verbosity="minimal", show_tone=False, show_gestures=False),
    ):
        add(sentence, anns, profile)

    # Gesture on the first and last token; tone plus gesture at anchor 0.
    add("Watch this.", [gest("pointing", 1)], PreferenceProfile(verbosity="verbose"))
    add("Look here", [gest("pointing", 0)], PreferenceProfile(verbosity="minimal"))
    add(
        "Careful now",
        [tone("urgent", 0.95), gest("head-shake", 0)],
        PreferenceProfile(verbosity="verbose"),
    )

    # Two gestures on one segment, one shared anchor.
    add(
        "Everyone please raise hands",
        [gest("hand-raise", 3), gest("nods", 3)],
        PreferenceProfile(verbosity="minimal"),
    )
    add(
        "First word then stop",
        [gest("shrugs", 0), gest("nods", 2)],
        PreferenceProfile(verbosity="verbose"),
    )

    # Defensive: a neutral tone annotation must never render a tag.
    add("nothing to see", [tone("neutral", 0.99)], PreferenceProfile(verbosity="verbose"))

    # Single-token segment.
    add("goodby", [], PreferenceProfile(verbosity="verbose"))
    add("Hello.", [tone("excited", 0.7)], PreferenceProfile(verbosity="minimal"))

    return cases


def main():
    root = Path(__file__).resolve().parent.parent
    out = root / "fixtures" / "render_cases.json"
    out.parent.mkdir(parents=True, exist_ok=True)
    cases = build_cases()
    out.write_text(json.dumps(cases, indent=2) + "\n", encoding="utf-8")
    print(f"wrote {out} ({len(cases)} cases)")


if __name__ == "__main__":
    main()
