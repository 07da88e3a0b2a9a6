"""Repetition counting state machine over a conditioned angle trace.

A repetition registers on each completing-direction crossing of the
range-of-motion mid-line (push: upward, pull: downward). The rep is correct
when the trace reached both ROM bounds (within tolerance) during the cycle
just closed; otherwise it is incorrect. A small debounce band around the
mid-line suppresses chatter from residual jitter.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

from .kinematics import ExerciseProfile

DEFAULT_TOLERANCE_DEG = 5.0  # slack on both ROM bounds for the correctness test
DEFAULT_DEBOUNCE_DEG = 2.0  # movement past the mid-line needed to commit a crossing


@dataclass(frozen=True)
class RepEvent:
    person_id: int
    frame: int
    time_s: float  # seconds from session start
    verdict: str  # "correct" or "incorrect"


class RepCounter:
    """Counts repetitions for one (person, exercise set)."""

    def __init__(self, profile: ExerciseProfile, person_id: int = 0,
                 tolerance: float = DEFAULT_TOLERANCE_DEG,
                 debounce: float = DEFAULT_DEBOUNCE_DEG):
        self.profile = profile
        self.person_id = person_id
        self.tolerance = tolerance
        self.debounce = debounce
        self.low = profile.rom_low
        self.high = profile.rom_high
        self.mid = profile.rom_mid
        # push completes on the upward (extension) crossing, pull on the
        # downward one
        self.completing_up = profile.motion_type == "push"
        self.phase = "unstarted"  # unstarted | above | below
        self.cycle_min: Optional[float] = None
        self.cycle_max: Optional[float] = None
        self.total = 0
        self.correct = 0
        self.incorrect = 0
        self.events: list[RepEvent] = []
        self._finalized = False

    def step(self, frame: int, time_s: float, angle: float) -> Optional[RepEvent]:
        """Advance one conditioned sample; return the RepEvent it completed,
        if any. Gap samples are a caller contract violation."""
        if angle is None:
            raise ValueError("counter fed a gap sample; condition the trace first")
        if self._finalized:
            raise RuntimeError("counter already finalized")

        if self.cycle_min is None or angle < self.cycle_min:
            self.cycle_min = angle
        if self.cycle_max is None or angle > self.cycle_max:
            self.cycle_max = angle

        if angle >= self.mid + self.debounce:
            new_phase = "above"
        elif angle <= self.mid - self.debounce:
            new_phase = "below"
        else:
            new_phase = self.phase

        event = None
        if new_phase != self.phase and self.phase != "unstarted":
            completing = (new_phase == "above") if self.completing_up else (new_phase == "below")
            if completing:
                reached_low = self.cycle_min <= self.low + self.tolerance
                reached_high = self.cycle_max >= self.high - self.tolerance
                verdict = "correct" if (reached_low and reached_high) else "incorrect"
                event = RepEvent(person_id=self.person_id, frame=frame,
                                 time_s=time_s, verdict=verdict)
                self.events.append(event)
                self.total += 1
                if verdict == "correct":
                    self.correct += 1
                else:
                    self.incorrect += 1
                # extremes start over from the crossing sample
                self.cycle_min = angle
                self.cycle_max = angle
        self.phase = new_phase
        return event

    def counts(self) -> tuple[int, int, int]:
        return (self.total, self.correct, self.incorrect)

    def finalize(self) -> tuple[int, int, int]:
        """Freeze counts; partial motion after the last crossing is discarded."""
        self._finalized = True
        return self.counts()
