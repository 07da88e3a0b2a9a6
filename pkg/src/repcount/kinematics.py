"""Joint-angle measurement and per-exercise parameter profiles.

Each exercise is characterized by a single major joint (the vertex of a
three-joint triple), a range of motion in degrees, and a motion type that
determines which mid-line crossing direction completes a repetition.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

from . import body25
from .body25 import NUM_JOINTS, mirror_triple
from .keypoints import RawSkeleton

LIMB_EPSILON = 1e-9  # input units; below this a limb vector is degenerate


class DegenerateGeometryError(ValueError):
    """A limb vector of the angle triple has (near-)zero length."""


class ProfileError(ValueError):
    """Exercise profile violates its invariants."""


@dataclass(frozen=True)
class ExerciseProfile:
    name: str
    joint_triple: tuple[int, int, int]  # (A, B, C); B is the vertex
    rom_low: float  # degrees
    rom_high: float  # degrees
    motion_type: str  # "push" or "pull"

    def __post_init__(self):
        a, b, c = self.joint_triple
        if len({a, b, c}) != 3 or not all(0 <= j < NUM_JOINTS for j in (a, b, c)):
            raise ProfileError(f"{self.name}: joint triple must be 3 distinct BODY_25 indices")
        if not 0 <= self.rom_low < self.rom_high <= 180:
            raise ProfileError(f"{self.name}: need 0 <= rom_low < rom_high <= 180")
        if self.motion_type not in ("push", "pull"):
            raise ProfileError(f"{self.name}: motion_type must be 'push' or 'pull'")

    @property
    def rom_mid(self) -> float:
        return 0.5 * (self.rom_low + self.rom_high)


def joint_angle(a, b, c) -> float:
    """Angle at vertex B of the triple (A, B, C), in degrees.

    theta = arccos(BA . BC / (|BA| |BC|)), the cosine clamped to [-1, 1]
    so rounding near collinearity cannot push the result outside [0, 180].
    """
    # scalar math: this runs per frame per person on 3-vectors
    bax, bay, baz = a[0] - b[0], a[1] - b[1], (a[2] - b[2]) if len(a) > 2 else 0.0
    bcx, bcy, bcz = c[0] - b[0], c[1] - b[1], (c[2] - b[2]) if len(c) > 2 else 0.0
    nba = math.sqrt(bax * bax + bay * bay + baz * baz)
    nbc = math.sqrt(bcx * bcx + bcy * bcy + bcz * bcz)
    if nba <= LIMB_EPSILON or nbc <= LIMB_EPSILON:
        raise DegenerateGeometryError("zero-length limb vector")
    cosang = (bax * bcx + bay * bcy + baz * bcz) / (nba * nbc)
    cosang = min(1.0, max(-1.0, cosang))
    return math.degrees(math.acos(cosang))


def _triple_confidence(skel: RawSkeleton, triple) -> float:
    conf = skel.confidence
    return (conf[triple[0]] + conf[triple[1]] + conf[triple[2]]) / 3.0


def angle_for(profile: ExerciseProfile, skel: RawSkeleton) -> Optional[float]:
    """Measure the profile's major-joint angle on a skeleton.

    The profile's triple names the primary (right) side; when any of its
    joints is undetected the mirrored left triple is used instead, and when
    both sides are fully detected the side with higher mean confidence wins.
    Returns None (a gap) when neither side is usable.
    """
    primary = profile.joint_triple
    mirrored = mirror_triple(primary)
    have_primary = skel.has(*primary)
    have_mirror = skel.has(*mirrored)
    if have_primary and have_mirror:
        triple = primary if _triple_confidence(skel, primary) >= _triple_confidence(skel, mirrored) else mirrored
    elif have_primary:
        triple = primary
    elif have_mirror:
        triple = mirrored
    else:
        return None
    a, b, c = triple
    try:
        return joint_angle(skel.coords[a], skel.coords[b], skel.coords[c])
    except DegenerateGeometryError:
        return None


# ROM bounds are artifact defaults chosen from standard exercise form; they
# are configuration, not measured values, and can be overridden per profile.
def builtin_profiles() -> dict[str, ExerciseProfile]:
    profiles = [
        ExerciseProfile("push-up", (body25.R_SHOULDER, body25.R_ELBOW, body25.R_WRIST), 75.0, 160.0, "push"),
        ExerciseProfile("pull-up", (body25.R_SHOULDER, body25.R_ELBOW, body25.R_WRIST), 60.0, 160.0, "pull"),
        ExerciseProfile("squat", (body25.R_HIP, body25.R_KNEE, body25.R_ANKLE), 80.0, 170.0, "push"),
    ]
    return {p.name: p for p in profiles}


def load_profiles(path: str | Path) -> dict[str, ExerciseProfile]:
    """Load a profile registry from a JSON config file.

    The file holds a list of objects with keys name, joint_triple (3 BODY_25
    indices, vertex in the middle), rom_low, rom_high, motion_type.
    """
    with open(path, "r", encoding="utf-8") as fh:
        raw = json.load(fh)
    if not isinstance(raw, list):
        raise ProfileError("profile config must be a JSON list")
    profiles = {}
    for entry in raw:
        try:
            profile = ExerciseProfile(
                name=entry["name"],
                joint_triple=tuple(entry["joint_triple"]),
                rom_low=float(entry["rom_low"]),
                rom_high=float(entry["rom_high"]),
                motion_type=entry["motion_type"],
            )
        except (KeyError, TypeError) as exc:
            raise ProfileError(f"bad profile entry {entry!r}: {exc}") from exc
        profiles[profile.name] = profile
    return profiles
