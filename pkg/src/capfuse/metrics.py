"""Session metrics: ingest counters, cue accounting, finalization latency."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any


def percentile(samples: list[float], pct: float) -> float:
    """Nearest-rank percentile; 0.0 for an empty sample set."""
    if not samples:
        return 0.0
    ordered = sorted(samples)
    rank = min(len(ordered), max(1, -(-pct * len(ordered) // 100)))
    return ordered[int(rank) - 1]


@dataclass(frozen=True, slots=True)
class LatencyStats:
    p50: float
    p95: float
    max: float

    def to_dict(self) -> dict[str, float]:
        return {"p50": self.p50, "p95": self.p95, "max": self.max}


@dataclass(frozen=True, slots=True)
class MetricsReport:
    events_in: dict[str, int]
    events_accepted: int
    events_rejected: dict[str, int]
    segments_final: int
    finalization_latency_ms: LatencyStats
    cues_attached: int
    cues_dropped: int
    cues_pending: int

    def to_dict(self) -> dict[str, Any]:
        return {
            "events_in": dict(self.events_in),
            "events_accepted": self.events_accepted,
            "events_rejected": dict(self.events_rejected),
            "segments_final": self.segments_final,
            "finalization_latency_ms": self.finalization_latency_ms.to_dict(),
            "cues_attached": self.cues_attached,
            "cues_dropped": self.cues_dropped,
            "cues_pending": self.cues_pending,
        }


@dataclass
class MetricsCollector:
    """Mutable counters owned by one pipeline or server run."""

    events_in: dict[str, int] = field(default_factory=dict)
    events_accepted: int = 0
    events_rejected: dict[str, int] = field(default_factory=dict)
    segments_final: int = 0
    latencies_ms: list[float] = field(default_factory=list)
    cues_accepted: int = 0
    cues_attached: int = 0
    cues_dropped: int = 0

    def count_in(self, source: str) -> None:
        self.events_in[source] = self.events_in.get(source, 0) + 1

    def count_rejected(self, reason: str) -> None:
        self.events_rejected[reason] = self.events_rejected.get(reason, 0) + 1

    def record_latency(self, ms: float) -> None:
        self.latencies_ms.append(ms)

    def snapshot(self, cues_pending: int = 0) -> MetricsReport:
        return MetricsReport(
            events_in=dict(self.events_in),
            events_accepted=self.events_accepted,
            events_rejected=dict(self.events_rejected),
            segments_final=self.segments_final,
            finalization_latency_ms=LatencyStats(
                p50=percentile(self.latencies_ms, 50),
                p95=percentile(self.latencies_ms, 95),
                max=max(self.latencies_ms) if self.latencies_ms else 0.0,
            ),
            cues_attached=self.cues_attached,
            cues_dropped=self.cues_dropped,
            cues_pending=cues_pending,
        )
