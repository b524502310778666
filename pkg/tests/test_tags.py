"""Tag grammar: surface forms, inverses, and the round-trip property."""
import re

import pytest

from capfuse.model import CueLabel
from capfuse.tags import (
    NotATag,
    UnknownSurface,
    format_tag,
    parse_tag,
    renderable_labels,
)

TAG_SHAPE = re.compile(r"^\[[a-z][a-z -]*\]$")


def test_minimal_tone_surfaces():
    assert format_tag(CueLabel("tone", "excited"), "minimal") == "[excited]"
    assert format_tag(CueLabel("tone", "urgent"), "minimal") == "[urgent]"
    assert format_tag(CueLabel("tone", "sarcastic"), "minimal") == "[sarcastic]"


def test_verbose_tone_surfaces():
    assert format_tag(CueLabel("tone", "confused"), "verbose") == "[confused tone]"
    assert format_tag(CueLabel("tone", "concerned"), "verbose") == "[concerned tone]"


def test_gesture_surfaces_minimal():
    expected = {
        "nods": "[nods]",
        "shrugs": "[shrugs]",
        "pointing": "[points]",
        "head-shake": "[shakes head]",
        "hand-raise": "[raises hand]",
    }
    for name, surface in expected.items():
        assert format_tag(CueLabel("gesture", name), "minimal") == surface


def test_gesture_surfaces_verbose():
    expected = {
        "nods": "[nod gesture]",
        "shrugs": "[shrug gesture]",
        "pointing": "[pointing gesture]",
        "head-shake": "[head-shake gesture]",
        "hand-raise": "[hand-raise gesture]",
    }
    for name, surface in expected.items():
        assert format_tag(CueLabel("gesture", name), "verbose") == surface


def test_off_renders_nothing():
    assert format_tag(CueLabel("tone", "excited"), "off") == ""
    assert format_tag(CueLabel("gesture", "nods"), "off") == ""


def test_neutral_never_renders():
    assert format_tag(CueLabel("tone", "neutral"), "minimal") == ""
    assert format_tag(CueLabel("tone", "neutral"), "verbose") == ""


def test_parse_known_surfaces():
    assert parse_tag("[shrug gesture]") == CueLabel("gesture", "shrugs")
    assert parse_tag("[urgent]") == CueLabel("tone", "urgent")
    assert parse_tag("[shakes head]") == CueLabel("gesture", "head-shake")
    assert parse_tag("[excited tone]") == CueLabel("tone", "excited")


def test_parse_rejections():
    with pytest.raises(NotATag):
        parse_tag("hello")
    with pytest.raises(NotATag):
        parse_tag("")
    with pytest.raises(UnknownSurface):
        parse_tag("[wibble]")
    with pytest.raises(UnknownSurface):
        parse_tag("[neutral]")  # no renderer ever produces it


def test_round_trip_identity_exhaustive():
    labels = renderable_labels()
    assert len(labels) == 11  # 6 renderable tones + 5 gestures
    for label in labels:
        for verbosity in ("minimal", "verbose"):
            assert parse_tag(format_tag(label, verbosity)) == label


def test_tag_shape_property():
    for label in renderable_labels():
        for verbosity in ("minimal", "verbose"):
            assert TAG_SHAPE.match(format_tag(label, verbosity))
