"""capfuse: real-time caption fusion.

Merges an ASR token stream with tone and gesture cue streams into
emotionally annotated caption segments, delivers them to display clients
over a live protocol, and lets each viewer tune annotation verbosity and
presentation while the session runs.
"""
from .fusion import Emission, FusionConfig, FusionEngine, load_config
from .ingest import IngestEvent, decode_event, encode_event
from .model import (
    Annotation,
    CaptionSegment,
    CueEvent,
    CueLabel,
    TranscriptToken,
    UnknownLabel,
    validate_label,
)
from .oracle import batch_finalize, batch_transcript
from .pipeline import Pipeline, replay_file, run_session_events
from .preferences import (
    InvalidPreference,
    PreferenceProfile,
    ProfileStore,
    apply_patch,
    to_render_directives,
    validate_patch,
)
from .rendering import render_segment_text, transcript_line
from .tags import NotATag, UnknownSurface, format_tag, parse_tag

__version__ = "0.1.0"

__all__ = [
    "Annotation",
    "CaptionSegment",
    "CueEvent",
    "CueLabel",
    "Emission",
    "FusionConfig",
    "FusionEngine",
    "IngestEvent",
    "InvalidPreference",
    "NotATag",
    "Pipeline",
    "PreferenceProfile",
    "ProfileStore",
    "TranscriptToken",
    "UnknownLabel",
    "UnknownSurface",
    "apply_patch",
    "batch_finalize",
    "batch_transcript",
    "decode_event",
    "encode_event",
    "format_tag",
    "load_config",
    "parse_tag",
    "render_segment_text",
    "replay_file",
    "run_session_events",
    "to_render_directives",
    "transcript_line",
    "validate_label",
    "validate_patch",
]
