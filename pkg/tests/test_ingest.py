"""Ingest codec and per-source ordering checks."""
import json
import random

import pytest

from capfuse.ingest import (
    IngestEvent,
    MalformedJson,
    ProsodyFrame,
    SchemaViolation,
    SourceState,
    UnsupportedVersion,
    WatermarkBeat,
    check_stream_order,
    decode_event,
    encode_event,
)
from capfuse.model import CueEvent, CueLabel, TranscriptToken, UnknownLabel

TOKEN_LINE = (
    '{"v":1,"src":"asr","type":"token","seq":1,"t0":0,"t1":250,'
    '"text":"Hello","speaker":"S1","stability":"final","conf":0.9}'
)
CUE_LINE = (
    '{"v":1,"src":"affect","type":"cue","seq":1,"t0":100,"t1":900,'
    '"kind":"tone","label":"concerned","conf":0.8}'
)


def test_decode_token():
    event = decode_event(TOKEN_LINE)
    assert event.source == "asr"
    token = event.payload
    assert isinstance(token, TranscriptToken)
    assert (token.source_seq, token.text, token.t_start, token.t_end) == (1, "Hello", 0, 250)
    assert token.stability == "final"
    assert token.confidence == 0.9


def test_decode_cue():
    event = decode_event(CUE_LINE)
    cue = event.payload
    assert isinstance(cue, CueEvent)
    assert cue.label == CueLabel("tone", "concerned")
    assert cue.confidence == 0.8


def test_decode_watermark_and_frame():
    beat = decode_event('{"v":1,"src":"gesture","type":"watermark","t":1500}').payload
    assert beat == WatermarkBeat("gesture", 1500)
    frame = decode_event(
        '{"v":1,"src":"prosody","type":"frame","t":200,"rms":0.5,"f0m":180.0,"f0v":90.0,"rate":4.1}'
    ).payload
    assert isinstance(frame, ProsodyFrame)
    assert frame.rms_energy == 0.5


def test_version_gate():
    with pytest.raises(UnsupportedVersion):
        decode_event('{"v":2,"src":"asr","type":"watermark","t":0}')


def test_malformed_json():
    with pytest.raises(MalformedJson):
        decode_event("{nope")
    with pytest.raises(MalformedJson):
        decode_event('"just a string"')
    with pytest.raises(MalformedJson):
        decode_event(b"\xff\xfe\x00")


@pytest.mark.parametrize(
    "mutation,field",
    [
        ({"text": "two words"}, "text"),
        ({"text": " lead"}, "text"),
        ({"text": ""}, "text"),
        ({"conf": 1.4}, "conf"),
        ({"t1": -5}, "t1"),
        ({"seq": 0}, "seq"),
        ({"stability": "guess"}, "stability"),
        ({"src": "video"}, "src"),
    ],
)
def test_schema_violations(mutation, field):
    obj = json.loads(TOKEN_LINE)
    obj.update(mutation)
    with pytest.raises(SchemaViolation) as err:
        decode_event(json.dumps(obj))
    assert err.value.field == field


def test_token_span_inverted_rejected():
    obj = json.loads(TOKEN_LINE)
    obj["t0"], obj["t1"] = 300, 100
    with pytest.raises(SchemaViolation):
        decode_event(json.dumps(obj))


def test_cue_kind_must_match_source():
    obj = json.loads(CUE_LINE)
    obj["kind"] = "gesture"
    obj["label"] = "nods"
    with pytest.raises(SchemaViolation):
        decode_event(json.dumps(obj))


def test_cue_unknown_label_rejected():
    obj = json.loads(CUE_LINE)
    obj["label"] = "ecstatic"
    with pytest.raises(UnknownLabel):
        decode_event(json.dumps(obj))


def test_tokens_only_on_asr():
    obj = json.loads(TOKEN_LINE)
    obj["src"] = "affect"
    with pytest.raises(SchemaViolation):
        decode_event(json.dumps(obj))


def _random_event(rng: random.Random) -> IngestEvent:
    kind = rng.choice(["token", "tone", "gesture", "watermark", "frame"])
    t0 = rng.randint(0, 100_000)
    t1 = t0 + rng.randint(0, 5000)
    if kind == "token":
        text = "".join(rng.choice("abcdefghijklmnop") for _ in range(rng.randint(1, 10)))
        return IngestEvent(
            "asr",
            TranscriptToken(
                rng.randint(1, 10_000), text, t0, t1, f"S{rng.randint(1, 4)}",
                rng.choice(["partial", "final"]), round(rng.random(), 4),
            ),
        )
    if kind == "tone":
        name = rng.choice(["neutral", "excited", "concerned", "confused", "urgent", "sarcastic", "calm"])
        return IngestEvent(
            "affect",
            CueEvent(rng.randint(1, 10_000), "tone", CueLabel("tone", name), t0, t1,
                     round(rng.random(), 4), "affect"),
        )
    if kind == "gesture":
        name = rng.choice(["nods", "shrugs", "pointing", "head-shake", "hand-raise"])
        return IngestEvent(
            "gesture",
            CueEvent(rng.randint(1, 10_000), "gesture", CueLabel("gesture", name), t0, t1,
                     round(rng.random(), 4), "gesture"),
        )
    if kind == "watermark":
        src = rng.choice(["asr", "affect", "gesture", "prosody"])
        return IngestEvent(src, WatermarkBeat(src, t0))
    return IngestEvent(
        "prosody",
        ProsodyFrame(t0, round(rng.random(), 4), round(rng.uniform(0, 400), 2),
                     round(rng.uniform(0, 2000), 2), round(rng.uniform(0, 9), 3)),
    )


def test_codec_round_trip_randomized():
    rng = random.Random(1234)
    for _ in range(500):
        event = _random_event(rng)
        assert decode_event(encode_event(event)) == event


def test_order_accepts_contiguous_sequence():
    state = SourceState(last_seq=3, last_t=500)
    event = IngestEvent("asr", TranscriptToken(4, "ok", 500, 700, "S1", "final", 0.9))
    assert check_stream_order(state, event) is None
    assert (state.last_seq, state.last_t) == (4, 500)


def test_order_rejects_sequence_gap():
    state = SourceState(last_seq=3, last_t=500)
    event = IngestEvent("asr", TranscriptToken(6, "ok", 600, 700, "S1", "final", 0.9))
    assert check_stream_order(state, event) == "seq_gap"
    assert state.dropped_count == 1
    assert state.last_seq == 3


def test_order_rejects_behind_watermark():
    state = SourceState(last_seq=3, last_t=800, watermark=1000)
    cue = IngestEvent(
        "affect",
        CueEvent(4, "tone", CueLabel("tone", "calm"), 900, 1200, 0.9, "affect"),
    )
    assert check_stream_order(state, cue) == "late"


def test_order_rejects_time_regression():
    state = SourceState(last_seq=1, last_t=900)
    event = IngestEvent("asr", TranscriptToken(2, "ok", 800, 950, "S1", "final", 0.9))
    assert check_stream_order(state, event) == "time_regress"


def test_watermark_beats_must_not_regress():
    state = SourceState()
    assert check_stream_order(state, IngestEvent("asr", WatermarkBeat("asr", 500))) is None
    assert check_stream_order(state, IngestEvent("asr", WatermarkBeat("asr", 400))) == "watermark_regress"
    assert state.watermark == 500


def test_order_state_monotone_over_random_accepts():
    rng = random.Random(5)
    state = SourceState()
    t = 0
    for seq in range(1, 200):
        t += rng.randint(0, 300)
        event = IngestEvent("asr", TranscriptToken(seq, "w", t, t + 50, "S1", "final", 0.5))
        prev_t = state.last_t
        assert check_stream_order(state, event) is None
        assert state.last_seq == seq
        assert state.last_t >= prev_t
