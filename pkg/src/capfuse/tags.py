"""The bracketed tag grammar: surface forms and their inverse.

Two renderable verbosity levels exist. Minimal uses short conversational
surfaces ("[excited]", "[shakes head]"); verbose appends the category word
("[excited tone]", "[head-shake gesture]"). tone/neutral has no surface at
any level.
"""
from __future__ import annotations

import logging
from typing import Literal, Union

from .model import Annotation, CueLabel, GESTURE_LABELS, TONE_LABELS

log = logging.getLogger(__name__)

Verbosity = Literal["off", "minimal", "verbose"]

# Minimal surface per gesture label; tones use their own name.
_GESTURE_MINIMAL = {
    "nods": "nods",
    "shrugs": "shrugs",
    "pointing": "points",
    "head-shake": "shakes head",
    "hand-raise": "raises hand",
}

# Base noun used in "[<noun> gesture]" verbose forms.
_GESTURE_BASE = {
    "nods": "nod",
    "shrugs": "shrug",
    "pointing": "pointing",
    "head-shake": "head-shake",
    "hand-raise": "hand-raise",
}

_MINIMAL_SURFACE_TO_LABEL: dict[str, CueLabel] = {}
for _name in TONE_LABELS:
    if _name != "neutral":
        _MINIMAL_SURFACE_TO_LABEL[_name] = CueLabel("tone", _name)
for _name, _surface in _GESTURE_MINIMAL.items():
    _MINIMAL_SURFACE_TO_LABEL[_surface] = CueLabel("gesture", _name)

_VERBOSE_SURFACE_TO_LABEL: dict[str, CueLabel] = {}
for _name in TONE_LABELS:
    if _name != "neutral":
        _VERBOSE_SURFACE_TO_LABEL[f"{_name} tone"] = CueLabel("tone", _name)
for _name, _base in _GESTURE_BASE.items():
    _VERBOSE_SURFACE_TO_LABEL[f"{_base} gesture"] = CueLabel("gesture", _name)


class NotATag(ValueError):
    """The text is not a bracketed tag at all."""


class UnknownSurface(ValueError):
    """Bracketed text that maps to no known tag surface."""


def format_tag(label: Union[CueLabel, Annotation], verbosity: Verbosity) -> str:
    """Render one annotation label as its bracketed display tag.

    Returns "" for verbosity off and for tone/neutral, which by definition
    never produces a rendered tag.
    """
    if isinstance(label, Annotation):
        label = label.label
    if verbosity == "off":
        return ""
    if label.kind == "tone" and label.name == "neutral":
        log.debug("suppressing tag for tone/neutral")
        return ""
    if verbosity == "minimal":
        if label.kind == "tone":
            return f"[{label.name}]"
        return f"[{_GESTURE_MINIMAL[label.name]}]"
    if verbosity == "verbose":
        if label.kind == "tone":
            return f"[{label.name} tone]"
        return f"[{_GESTURE_BASE[label.name]} gesture]"
    raise ValueError(f"unknown verbosity: {verbosity!r}")


def parse_tag(text: str) -> CueLabel:
    """Invert format_tag: map a bracketed tag back to its category and label.

    Raises NotATag when text is not "[...]" and UnknownSurface when the
    bracketed content matches no minimal or verbose surface form.
    """
    if len(text) < 2 or not text.startswith("[") or not text.endswith("]"):
        raise NotATag(f"not a bracketed tag: {text!r}")
    surface = text[1:-1]
    label = _MINIMAL_SURFACE_TO_LABEL.get(surface) or _VERBOSE_SURFACE_TO_LABEL.get(surface)
    if label is None:
        raise UnknownSurface(f"unmappable tag surface: {surface!r}")
    return label


def renderable_labels() -> list[CueLabel]:
    """Every vocabulary member that owns a tag surface (all but tone/neutral)."""
    tones = [CueLabel("tone", n) for n in sorted(TONE_LABELS) if n != "neutral"]
    gestures = [CueLabel("gesture", n) for n in sorted(GESTURE_LABELS)]
    return tones + gestures
