"""Person re-identification across frames by Euclidean keypoint matching.

Each skeleton in a new frame is paired with the spatially closest known
person (greedy smallest-distance-first); unmatched skeletons get fresh ids
and persons unseen for longer than the retention window are retired.
Distances use raw coordinates, since spatial position is the identity cue.
"""
from __future__ import annotations

import math
import statistics
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .body25 import MID_HIP, NECK
from .keypoints import RawSkeleton, SkeletonFrame

DEFAULT_RETENTION_WINDOW = 30  # frames (~1 s at 30 fps)
# gate = this fraction of the median torso length observed in the frame
AUTO_GATE_TORSO_FRACTION = 0.5


class SequencingError(RuntimeError):
    """Frame fed to the tracker out of order."""


def skeleton_distance(a: RawSkeleton, b: RawSkeleton) -> Optional[float]:
    """Mean Euclidean distance over joints detected in both skeletons.

    Returns None (incomparable) when the two skeletons share no detected
    joint.
    """
    shared = a.detected & b.detected
    if not shared.any():
        return None
    diffs = a.coords[shared] - b.coords[shared]
    return float(np.mean(np.linalg.norm(diffs, axis=1)))


@dataclass
class TrackedPerson:
    id: int
    last_skeleton: RawSkeleton
    last_seen_frame: int
    frames_missing: int = 0


@dataclass
class Assignment:
    frame_index: int
    pairs: list[tuple[int, int]] = field(default_factory=list)  # (person id, skeleton index)
    new_ids: list[int] = field(default_factory=list)  # skeleton indices granted fresh ids
    retired: list[int] = field(default_factory=list)  # person ids dropped this frame
    # every skeleton index -> assigned person id (matched or fresh)
    id_by_skeleton: dict[int, int] = field(default_factory=dict)


def _frame_torso_gate(frame: SkeletonFrame) -> float:
    torsos = []
    for skel in frame.skeletons:
        if skel.confidence[NECK] > 0 and skel.confidence[MID_HIP] > 0:
            dx, dy, dz = skel.coords[NECK] - skel.coords[MID_HIP]
            torsos.append(math.sqrt(dx * dx + dy * dy + dz * dz))
    if not torsos:
        return float("inf")
    return AUTO_GATE_TORSO_FRACTION * statistics.median(torsos)


class PoseTracker:
    """Single-writer sequential tracker for one session stream."""

    def __init__(self, max_match_distance: Optional[float] = None,
                 retention_window: int = DEFAULT_RETENTION_WINDOW):
        self.max_match_distance = max_match_distance
        self.retention_window = retention_window
        self.persons: dict[int, TrackedPerson] = {}
        self._next_id = 1
        self._last_frame_index: Optional[int] = None

    def match_frame(self, frame: SkeletonFrame) -> Assignment:
        if self._last_frame_index is not None and frame.frame_index <= self._last_frame_index:
            raise SequencingError(
                f"frame {frame.frame_index} not after frame {self._last_frame_index}"
            )
        self._last_frame_index = frame.frame_index

        gate = self.max_match_distance
        if gate is None:
            gate = _frame_torso_gate(frame)

        assignment = Assignment(frame_index=frame.frame_index)
        candidates = []
        for pid, person in self.persons.items():
            for sidx, skel in enumerate(frame.skeletons):
                d = skeleton_distance(person.last_skeleton, skel)
                if d is not None and d <= gate:
                    candidates.append((d, pid, sidx))
        candidates.sort()

        used_persons: set[int] = set()
        used_skeletons: set[int] = set()
        for d, pid, sidx in candidates:
            if pid in used_persons or sidx in used_skeletons:
                continue
            used_persons.add(pid)
            used_skeletons.add(sidx)
            assignment.pairs.append((pid, sidx))
            assignment.id_by_skeleton[sidx] = pid
            person = self.persons[pid]
            person.last_skeleton = frame.skeletons[sidx]
            person.last_seen_frame = frame.frame_index
            person.frames_missing = 0

        for sidx, skel in enumerate(frame.skeletons):
            if sidx in used_skeletons:
                continue
            pid = self._next_id
            self._next_id += 1  # ids are never reused
            self.persons[pid] = TrackedPerson(
                id=pid, last_skeleton=skel, last_seen_frame=frame.frame_index
            )
            assignment.new_ids.append(sidx)
            assignment.id_by_skeleton[sidx] = pid

        for pid in list(self.persons):
            person = self.persons[pid]
            if person.last_seen_frame != frame.frame_index:
                person.frames_missing = frame.frame_index - person.last_seen_frame
                if person.frames_missing > self.retention_window:
                    assignment.retired.append(pid)
                    del self.persons[pid]

        assignment.pairs.sort()
        return assignment
