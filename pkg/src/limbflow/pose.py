"""Core pose, frame, and sequence value types.

All types are immutable; tracker stages produce new values via
``dataclasses.replace`` instead of mutating shared state.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Iterator, Optional

from .skeleton import SkeletonTopology


@dataclass(frozen=True)
class JointCandidate:
    """A single detected joint: pixel position, confidence, visibility."""

    x: float
    y: float
    confidence: float = 1.0
    visible: bool = True

    def xy(self) -> tuple[float, float]:
        return (self.x, self.y)


@dataclass(frozen=True)
class Pose:
    """Fixed-length joint list (one slot per topology joint) plus track id.

    Missing joints are ``None`` slots, never sentinel coordinates: (0, 0)
    is a valid pixel.
    """

    joints: tuple[Optional[JointCandidate], ...]
    track_id: Optional[int] = None

    def joint(self, j: int) -> Optional[JointCandidate]:
        return self.joints[j]

    def present_joints(self) -> list[int]:
        """Indices of joints that are present and visible."""
        return [j for j, c in enumerate(self.joints) if c is not None and c.visible]

    @property
    def n_present(self) -> int:
        return len(self.present_joints())

    def with_track_id(self, track_id: Optional[int]) -> "Pose":
        return replace(self, track_id=track_id)

    def centroid(self) -> Optional[tuple[float, float]]:
        """Mean position of present, visible joints; None if empty."""
        pts = [self.joints[j] for j in self.present_joints()]
        if not pts:
            return None
        return (
            sum(p.x for p in pts) / len(pts),
            sum(p.y for p in pts) / len(pts),
        )


def common_joints(a: Pose, b: Pose) -> list[int]:
    """Ascending indices where both poses have present, visible joints."""
    if len(a.joints) != len(b.joints):
        raise ValueError("poses have different joint counts")
    out = []
    for j in range(len(a.joints)):
        ca, cb = a.joints[j], b.joints[j]
        if ca is not None and cb is not None and ca.visible and cb.visible:
            out.append(j)
    return out


@dataclass(frozen=True)
class FramePoses:
    """All poses detected in one frame."""

    frame_index: int
    poses: tuple[Pose, ...]
    image_size: tuple[int, int]  # (width, height) px

    def out_of_bounds_joints(self) -> list[tuple[int, int]]:
        """(pose_index, joint_index) pairs of visible joints outside the image."""
        w, h = self.image_size
        bad = []
        for pi, pose in enumerate(self.poses):
            for j in pose.present_joints():
                c = pose.joints[j]
                if not (0 <= c.x < w and 0 <= c.y < h) or not (
                    math.isfinite(c.x) and math.isfinite(c.y)
                ):
                    bad.append((pi, j))
        return bad


@dataclass(frozen=True)
class Sequence:
    """Ordered frames plus the topology they are expressed in."""

    frames: tuple[FramePoses, ...]
    topology: SkeletonTopology

    def __post_init__(self) -> None:
        indices = [f.frame_index for f in self.frames]
        if any(b <= a for a, b in zip(indices, indices[1:])):
            raise ValueError("frame indices must be strictly increasing")

    def __len__(self) -> int:
        return len(self.frames)

    def __iter__(self) -> Iterator[FramePoses]:
        return iter(self.frames)

    def frame_by_index(self, frame_index: int) -> FramePoses:
        for f in self.frames:
            if f.frame_index == frame_index:
                return f
        raise KeyError(f"no frame with index {frame_index}")
