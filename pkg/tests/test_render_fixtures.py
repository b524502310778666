"""The engine side of the shared render-conformance contract: every fixture
case must match render_segment_text exactly. The overlay client asserts the
same file from its side."""
import json
from pathlib import Path

from capfuse.model import Annotation, CaptionSegment, CueLabel, TranscriptToken
from capfuse.preferences import PreferenceProfile
from capfuse.rendering import render_segment_text

FIXTURES = Path(__file__).parent.parent / "fixtures" / "render_cases.json"


def rebuild_segment(case):
    words = case["plain"].split(" ")
    tokens = []
    t = 0
    for i, word in enumerate(words):
        tokens.append(TranscriptToken(i + 1, word, t, t + 200, "S1", "final", 0.9))
        t += 250
    annotations = tuple(
        Annotation(
            a["cat"],
            CueLabel(a["cat"], a["label"]),
            a["anchor"],
            a["conf"],
        )
        for a in case["annotations"]
    )
    return CaptionSegment(
        "seg-000001", tuple(tokens), annotations,
        tokens[0].t_start, tokens[-1].t_end, "final", 0,
    )


def test_every_fixture_case_matches_engine_renderer():
    cases = json.loads(FIXTURES.read_text(encoding="utf-8"))
    assert len(cases) >= 30
    for case in cases:
        segment = rebuild_segment(case)
        profile = PreferenceProfile(**case["profile"])
        assert render_segment_text(segment, profile) == case["expected"], case
