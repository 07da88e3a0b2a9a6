"""Session outputs: the per-person text report and machine-readable JSON/CSV.

One line is printed per repetition event — "One Attempt!" for an incorrect
rep, "- Correct!" for a correct one — followed by the per-person summary
block, so Total Reps always equals Correct + Incorrect.
"""
from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable

from .counting import RepEvent

REPORT_FORMAT_VERSION = 1


@dataclass
class PersonSummary:
    person_id: int
    predicted_exercise: str
    total: int
    correct: int
    incorrect: int
    events: list[RepEvent] = field(default_factory=list)

    def __post_init__(self):
        if self.total != self.correct + self.incorrect:
            raise ValueError("total must equal correct + incorrect")


@dataclass
class SessionResult:
    fps: float
    frame_count: int
    profiles: list[str]  # profile names in use
    summaries: list[PersonSummary] = field(default_factory=list)
    id_history: dict[int, list[int]] = field(default_factory=dict)  # person id -> frames seen


def format_timestamp(seconds: float) -> str:
    """Zero-padded "MM:SS sec"; minutes may exceed 59 (no hour rollover)."""
    if seconds < 0:
        raise ValueError("timestamp must be >= 0")
    total = int(seconds)
    return f"{total // 60:02d}:{total % 60:02d} sec"


def _event_line(event: RepEvent) -> str:
    prefix = "- Correct!" if event.verdict == "correct" else "One Attempt!"
    return f"{prefix} - {format_timestamp(event.time_s)}"


def render_text(result: SessionResult) -> str:
    """The plain-text session report, persons in ascending id order."""
    blocks = []
    for summary in sorted(result.summaries, key=lambda s: s.person_id):
        lines = [_event_line(e) for e in summary.events]
        lines.append("")
        lines.append(f"Person {summary.person_id}")
        lines.append(f"Predicted Exercise: {summary.predicted_exercise}")
        lines.append(f"Total Reps:  {summary.total}")
        lines.append(f"Correct Reps:  {summary.correct}")
        lines.append(f"Incorrect Reps:  {summary.incorrect}")
        blocks.append("\n".join(lines))
    if not blocks:
        return ""
    return "\n\n".join(blocks) + "\n"


def render_json(result: SessionResult) -> bytes:
    """Versioned machine-readable report (deterministic byte output)."""
    doc = {
        "format_version": REPORT_FORMAT_VERSION,
        "session": {
            "fps": result.fps,
            "frame_count": result.frame_count,
            "profiles": sorted(result.profiles),
        },
        "persons": [
            {
                "person_id": s.person_id,
                "predicted_exercise": s.predicted_exercise,
                "total_reps": s.total,
                "correct_reps": s.correct,
                "incorrect_reps": s.incorrect,
                "events": [
                    {
                        "frame": e.frame,
                        "time_s": e.time_s,
                        "timestamp": format_timestamp(e.time_s),
                        "verdict": e.verdict,
                    }
                    for e in s.events
                ],
                "frames_seen": result.id_history.get(s.person_id, []),
            }
            for s in sorted(result.summaries, key=lambda s: s.person_id)
        ],
    }
    return json.dumps(doc, sort_keys=True, separators=(",", ":")).encode("utf-8")


def parse_report_json(data: bytes) -> dict:
    doc = json.loads(data.decode("utf-8"))
    if doc.get("format_version") != REPORT_FORMAT_VERSION:
        raise ValueError("unsupported report format version")
    return doc


def write_events_csv(path: str | Path, events: Iterable[RepEvent]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["person", "frame", "time_s", "verdict"])
        for e in events:
            writer.writerow([e.person_id, e.frame, repr(e.time_s), e.verdict])


def write_trace_csv(path: str | Path, rows: Iterable[tuple]) -> None:
    """Angle-trace export: frame, raw_angle ('' for gaps), filled, conditioned."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["frame", "raw_angle", "filled", "conditioned"])
        for frame, raw, filled, conditioned in rows:
            writer.writerow([frame, "" if raw is None else repr(raw), repr(filled), repr(conditioned)])


def report_schema() -> dict:
    """JSON schema for the report document, as shipped in the package."""
    schema_path = Path(__file__).with_name("report_schema.json")
    return json.loads(schema_path.read_text(encoding="utf-8"))
