"""Toy prosody-based tone detector.

Session-long running statistics (Welford) turn each one-second window of
feature frames into z-scores; a fixed first-match rule table maps the
z-scores to a tone cue. The thresholds are deliberately simple and live in
one place so they can be tuned.
"""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from math import sqrt
from typing import Deque, Optional, Sequence

from .ingest import PROSODY_HOP_MS, ProsodyFrame
from .model import CueEvent, CueLabel

WINDOW_FRAMES = 10
BASELINE_FRAMES = 50  # 5 s at the 100 ms hop: no output before this

FEATURES = ("rms_energy", "f0_mean", "f0_var", "rate")


@dataclass
class Welford:
    """Numerically stable running mean/variance."""

    count: int = 0
    mean: float = 0.0
    m2: float = 0.0

    def update(self, x: float) -> None:
        self.count += 1
        delta = x - self.mean
        self.mean += delta / self.count
        self.m2 += delta * (x - self.mean)

    @property
    def std(self) -> float:
        if self.count < 2:
            return 0.0
        return sqrt(self.m2 / self.count)


@dataclass
class RunningStats:
    """One Welford accumulator per prosody feature."""

    rms_energy: Welford = field(default_factory=Welford)
    f0_mean: Welford = field(default_factory=Welford)
    f0_var: Welford = field(default_factory=Welford)
    rate: Welford = field(default_factory=Welford)

    def update(self, frame: ProsodyFrame) -> None:
        for name in FEATURES:
            getattr(self, name).update(getattr(frame, name))

    @property
    def samples(self) -> int:
        return self.rms_energy.count

    def zscores(self, window: Sequence[ProsodyFrame]) -> dict[str, float]:
        """z-score of each feature's window mean against the session baseline."""
        out: dict[str, float] = {}
        n = len(window)
        for name in FEATURES:
            win_mean = sum(getattr(f, name) for f in window) / n
            acc: Welford = getattr(self, name)
            out[name] = (win_mean - acc.mean) / acc.std if acc.std > 0 else 0.0
        return out


def classify_tone(
    window: Sequence[ProsodyFrame], stats: RunningStats
) -> Optional[tuple[CueLabel, float]]:
    """Map one full window to a tone label, or None for neutral.

    The rule table is first-match; its order is part of the contract.
    Confidence is min(1, max |z| / 3) over all features.
    """
    if len(window) < WINDOW_FRAMES or stats.samples < BASELINE_FRAMES:
        return None
    z = stats.zscores(window)
    z_energy, z_f0var, z_rate = z["rms_energy"], z["f0_var"], z["rate"]

    if z_energy > 1 and z_f0var > 1:
        name = "excited"
    elif z_energy > 1 and z_rate > 1:
        name = "urgent"
    elif z_energy < -1 and z_rate < -0.5:
        name = "calm"
    elif z_f0var > 1.5 and z_energy <= 1:
        name = "concerned"
    else:
        return None

    confidence = min(1.0, max(abs(v) for v in z.values()) / 3.0)
    return CueLabel("tone", name), confidence


class ToneClassifier:
    """Stateful wrapper: feed frames, get tone cues.

    Keeps the sliding window, the session baseline and a cue sequence
    counter. A gap in the fixed 100 ms hop resets the window (the baseline
    survives). Output is deterministic in the frame sequence.
    """

    def __init__(self, source_id: str = "prosody"):
        self.source_id = source_id
        self.stats = RunningStats()
        self.window: Deque[ProsodyFrame] = deque(maxlen=WINDOW_FRAMES)
        self._next_seq = 1
        self._last_t: Optional[int] = None

    def process(self, frame: ProsodyFrame) -> Optional[CueEvent]:
        if self._last_t is not None and frame.t != self._last_t + PROSODY_HOP_MS:
            self.window.clear()
        self._last_t = frame.t
        self.stats.update(frame)
        self.window.append(frame)

        result = classify_tone(self.window, self.stats)
        if result is None:
            return None
        label, confidence = result
        cue = CueEvent(
            source_seq=self._next_seq,
            kind="tone",
            label=label,
            t_start=self.window[0].t,
            t_end=self.window[-1].t + PROSODY_HOP_MS,
            confidence=confidence,
            source_id=self.source_id,
        )
        self._next_seq += 1
        return cue

    def watermark_for(self, frame: ProsodyFrame) -> int:
        """Affect-stream watermark implied by having processed this frame.

        Any future window starts strictly after the current one, so no
        future cue can start before the current window's first frame.
        """
        return max(0, frame.t - (WINDOW_FRAMES - 1) * PROSODY_HOP_MS)
