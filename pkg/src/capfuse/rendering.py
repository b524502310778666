"""Turn a caption segment plus viewer preferences into a display string."""
from __future__ import annotations

from .model import CaptionSegment
from .preferences import PreferenceProfile
from .tags import format_tag

VERBOSE_PROFILE = PreferenceProfile(verbosity="verbose")


def render_segment_text(segment: CaptionSegment, profile: PreferenceProfile) -> str:
    """Join token texts and weave in annotation tags per the profile.

    The tone tag (at most one) precedes token 0; each gesture tag follows
    the token at its anchor. With verbosity off, or a category toggled off,
    the corresponding tags are omitted, so the output degrades to the plain
    space-joined transcript.
    """
    words = [tok.text for tok in segment.tokens]
    if profile.verbosity == "off":
        return " ".join(words)

    tone_tags: list[str] = []
    gesture_tags: dict[int, list[str]] = {}
    for ann in segment.annotations:
        if ann.category == "tone":
            if not profile.show_tone:
                continue
            tag = format_tag(ann.label, profile.verbosity)
            if tag:
                tone_tags.append(tag)
        else:
            if not profile.show_gestures:
                continue
            tag = format_tag(ann.label, profile.verbosity)
            if tag:
                gesture_tags.setdefault(ann.anchor, []).append(tag)

    parts: list[str] = list(tone_tags)
    for idx, word in enumerate(words):
        parts.append(word)
        parts.extend(gesture_tags.get(idx, ()))
    return " ".join(parts)


def transcript_line(segment: CaptionSegment) -> str:
    """One golden-transcript line: span plus the fixed verbose rendering."""
    text = render_segment_text(segment, VERBOSE_PROFILE)
    return f"{segment.t_start}..{segment.t_end}|{text}"
