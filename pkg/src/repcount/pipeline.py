"""The end-to-end session engine: parse -> track -> recognize -> angle ->
condition -> count -> report.

One SessionEngine processes one frame stream sequentially. Each tracked
person carries a label window and a stack of exercise sets; when the
windowed label switches to a different known exercise the current set's
counter is finalized and a new one starts. Unknown and warmup labels pause
counting without closing the set.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

from .conditioning import DEFAULT_OUTLIER_ITERATIONS, StreamingConditioner
from .counting import DEFAULT_DEBOUNCE_DEG, DEFAULT_TOLERANCE_DEG, RepCounter, RepEvent
from .keypoints import SkeletonFrame, normalize_skeleton
from .kinematics import ExerciseProfile, angle_for, builtin_profiles
from .recognizer import (UNKNOWN, LabelWindow, MlpModel, RejectThresholds,
                         classify_with_reject)
from .reporting import PersonSummary, SessionResult
from .tracker import PoseTracker


@dataclass
class EngineConfig:
    tolerance: float = DEFAULT_TOLERANCE_DEG
    debounce: float = DEFAULT_DEBOUNCE_DEG
    outlier_iterations: int = DEFAULT_OUTLIER_ITERATIONS
    gap_mode: str = "extrapolate"
    reject_mode: str = "one-sided"  # one-sided | two-sided | off
    max_match_distance: Optional[float] = None
    retention_window: int = 30
    keep_traces: bool = False  # retain per-set angle traces for CSV export


@dataclass
class _ExerciseSet:
    exercise: str
    conditioner: StreamingConditioner
    counter: RepCounter
    frames: int = 0
    trace: list[tuple[int, Optional[float], float, float]] = field(default_factory=list)


@dataclass
class _PersonState:
    person_id: int
    window: LabelWindow = field(default_factory=LabelWindow)
    active: Optional[_ExerciseSet] = None
    closed_sets: list[_ExerciseSet] = field(default_factory=list)
    frames_seen: list[int] = field(default_factory=list)
    last_window_label: str = UNKNOWN
    raw_angles: dict[int, Optional[float]] = field(default_factory=dict)


class SessionEngine:
    def __init__(self, model: Optional[MlpModel] = None,
                 thresholds: Optional[RejectThresholds] = None,
                 profiles: Optional[dict[str, ExerciseProfile]] = None,
                 config: EngineConfig = EngineConfig()):
        self.model = model
        self.thresholds = thresholds
        self.profiles = profiles if profiles is not None else builtin_profiles()
        self.config = config
        self.tracker = PoseTracker(max_match_distance=config.max_match_distance,
                                   retention_window=config.retention_window)
        self.persons: dict[int, _PersonState] = {}
        self.fps: Optional[float] = None
        self.frame_count = 0
        self._finalized = False

    def process_frame(self, frame: SkeletonFrame) -> None:
        if self._finalized:
            raise RuntimeError("session already finalized")
        if self.fps is None:
            self.fps = frame.source_fps
        self.frame_count += 1
        assignment = self.tracker.match_frame(frame)
        for sidx, skel in enumerate(frame.skeletons):
            pid = assignment.id_by_skeleton[sidx]
            state = self.persons.get(pid)
            if state is None:
                state = self.persons[pid] = _PersonState(person_id=pid)
            state.frames_seen.append(frame.frame_index)
            label = self._frame_label(skel)
            state.window.push(label)
            windowed = state.window.current()
            state.last_window_label = windowed
            if windowed in self.profiles:
                self._step_exercise(state, windowed, skel, frame.frame_index)

    def _frame_label(self, skel) -> str:
        if self.model is None:
            return UNKNOWN
        feature = normalize_skeleton(skel)
        if feature is None:
            return UNKNOWN
        return classify_with_reject(self.model, self.thresholds, feature,
                                    mode=self.config.reject_mode)

    def _step_exercise(self, state: _PersonState, exercise: str, skel, frame_index: int) -> None:
        if state.active is not None and state.active.exercise != exercise:
            self._close_set(state)
        if state.active is None:
            profile = self.profiles[exercise]
            state.active = _ExerciseSet(
                exercise=exercise,
                conditioner=StreamingConditioner(profile.rom_mid,
                                                 iterations=self.config.outlier_iterations,
                                                 gap_mode=self.config.gap_mode),
                counter=RepCounter(profile, person_id=state.person_id,
                                   tolerance=self.config.tolerance,
                                   debounce=self.config.debounce),
            )
        current = state.active
        profile = self.profiles[exercise]
        raw = angle_for(profile, skel)
        if self.config.keep_traces:
            state.raw_angles[frame_index] = raw
        current.frames += 1
        for f, filled, conditioned in current.conditioner.feed(frame_index, raw):
            current.counter.step(f, f / (self.fps or 30.0), conditioned)
            if self.config.keep_traces:
                current.trace.append((f, state.raw_angles.get(f), filled, conditioned))

    def _close_set(self, state: _PersonState) -> None:
        current = state.active
        if current is None:
            return
        for f, filled, conditioned in current.conditioner.flush():
            current.counter.step(f, f / (self.fps or 30.0), conditioned)
            if self.config.keep_traces:
                current.trace.append((f, state.raw_angles.get(f), filled, conditioned))
        current.counter.finalize()
        state.closed_sets.append(current)
        state.active = None

    def finalize(self) -> SessionResult:
        if self._finalized:
            raise RuntimeError("session already finalized")
        self._finalized = True
        summaries = []
        id_history = {}
        for pid in sorted(self.persons):
            state = self.persons[pid]
            self._close_set(state)
            events: list[RepEvent] = []
            total = correct = incorrect = 0
            dominant = None
            for ex_set in state.closed_sets:
                events.extend(ex_set.counter.events)
                t, c, i = ex_set.counter.counts()
                total += t
                correct += c
                incorrect += i
                if dominant is None or ex_set.frames > dominant.frames:
                    dominant = ex_set
            predicted = dominant.exercise if dominant is not None else state.last_window_label
            if predicted not in self.profiles:
                predicted = UNKNOWN
            summaries.append(PersonSummary(
                person_id=pid, predicted_exercise=predicted,
                total=total, correct=correct, incorrect=incorrect, events=events,
            ))
            id_history[pid] = state.frames_seen
        return SessionResult(
            fps=self.fps if self.fps is not None else 30.0,
            frame_count=self.frame_count,
            profiles=sorted(self.profiles),
            summaries=summaries,
            id_history=id_history,
        )

    def traces(self) -> dict[int, list[tuple[int, Optional[float], float, float]]]:
        """Per-person conditioned angle traces (requires keep_traces)."""
        out = {}
        for pid, state in self.persons.items():
            rows: list[tuple[int, Optional[float], float, float]] = []
            for ex_set in state.closed_sets:
                rows.extend(ex_set.trace)
            if state.active is not None:
                rows.extend(state.active.trace)
            out[pid] = rows
        return out


def analyze_frames(frames, model=None, thresholds=None, profiles=None,
                   config: EngineConfig = EngineConfig()) -> SessionResult:
    """Run a whole pre-parsed frame list through a fresh engine."""
    engine = SessionEngine(model=model, thresholds=thresholds,
                           profiles=profiles, config=config)
    for frame in frames:
        engine.process_frame(frame)
    return engine.finalize()
