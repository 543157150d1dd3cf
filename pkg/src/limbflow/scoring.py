"""Association scoring between candidate poses in two frames.

The combined score mixes a flow term and a distance term:

    score = alpha * flow + (1 - alpha) * exp(-mean_joint_distance / scale)

The flow term is the line integral of the flow map along each common
joint's displacement segment, dotted with the normalized displacement
direction; it lives in [-1, 1]. The raw distance term is a pixel
quantity, so it is mapped through ``exp(-d / distance_scale)`` to a
similarity in (0, 1] before mixing; without that the two terms would not
share a scale. The distance term is what keeps zero-motion association
working, where the flow term is identically zero.

Pose pairs with no common joints cannot be scored and receive the
``forbid_sentinel`` (-inf by default), which downstream assignment
treats as a forbidden link.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .encoder import FlowMapGrid
from .pose import FramePoses, Pose, common_joints
from .skeleton import SkeletonTopology

FORBIDDEN = float("-inf")


@dataclass(frozen=True)
class ScoreConfig:
    alpha: float = 0.5
    integral_samples: int = 20
    distance_scale: float = 32.0
    forbid_sentinel: float = FORBIDDEN
    bilinear: bool = False
    epsilon_motion: float = 1e-6

    def validate(self) -> None:
        if not (0.0 <= self.alpha <= 1.0):
            raise ValueError("alpha must be in [0, 1]")
        if self.integral_samples < 1:
            raise ValueError("integral_samples must be >= 1")
        if not self.distance_scale > 0:
            raise ValueError("distance_scale must be > 0")


def _sample_nearest(grid: FlowMapGrid, channel: int, pts: np.ndarray) -> np.ndarray:
    """Nearest-cell lookups for an (n, 2) array of pixel points.

    Points outside the grid extent read as zero vectors. Default lookup
    mode; no interpolation, for reproducibility.
    """
    s = float(grid.grid_stride)
    ix = np.rint(pts[:, 0] / s).astype(np.int64)
    iy = np.rint(pts[:, 1] / s).astype(np.int64)
    inside = (
        (pts[:, 0] >= 0)
        & (pts[:, 0] < grid.width * s)
        & (pts[:, 1] >= 0)
        & (pts[:, 1] < grid.height * s)
    )
    ix = np.clip(ix, 0, grid.width - 1)
    iy = np.clip(iy, 0, grid.height - 1)
    out = grid.vectors[channel, iy, ix].astype(np.float64)
    out[~inside] = 0.0
    return out


def _sample_bilinear(grid: FlowMapGrid, channel: int, pts: np.ndarray) -> np.ndarray:
    """Bilinear interpolation over cell centers, zero-padded outside."""
    s = float(grid.grid_stride)
    u = pts[:, 0] / s
    v = pts[:, 1] / s
    x0 = np.floor(u).astype(np.int64)
    y0 = np.floor(v).astype(np.int64)
    fx = (u - x0)[:, None]
    fy = (v - y0)[:, None]

    def at(xi: np.ndarray, yi: np.ndarray) -> np.ndarray:
        valid = (xi >= 0) & (xi < grid.width) & (yi >= 0) & (yi < grid.height)
        xi_c = np.clip(xi, 0, grid.width - 1)
        yi_c = np.clip(yi, 0, grid.height - 1)
        vals = grid.vectors[channel, yi_c, xi_c].astype(np.float64)
        vals[~valid] = 0.0
        return vals

    return (
        at(x0, y0) * (1 - fx) * (1 - fy)
        + at(x0 + 1, y0) * fx * (1 - fy)
        + at(x0, y0 + 1) * (1 - fx) * fy
        + at(x0 + 1, y0 + 1) * fx * fy
    )


def sample_grid(grid: FlowMapGrid, channel: int, pts: np.ndarray, bilinear: bool = False) -> np.ndarray:
    if bilinear:
        return _sample_bilinear(grid, channel, pts)
    return _sample_nearest(grid, channel, pts)


def flow_score(
    pose_later: Pose,
    pose_earlier: Pose,
    grid: FlowMapGrid,
    topo: SkeletonTopology,
    cfg: ScoreConfig,
) -> float:
    """Line-integral flow score for a candidate pose pair.

    For each common joint the displacement segment is sampled at the
    midpoints of ``integral_samples`` equal sub-intervals; each sampled
    grid vector (from the joint's assigned limb channel) is dotted with
    the normalized displacement direction. Per-joint means are averaged
    over the common joints. Joints with zero displacement contribute 0
    but still count toward the average, mirroring the encoder's epsilon
    rule. The grid must have been encoded with the same (later, earlier)
    frame roles as the pose arguments; swapping the roles negates the
    score.
    """
    common = common_joints(pose_later, pose_earlier)
    if not common:
        return cfg.forbid_sentinel
    u = (np.arange(cfg.integral_samples, dtype=np.float64) + 0.5) / cfg.integral_samples
    total = 0.0
    for j in common:
        a = pose_later.joint(j)
        b = pose_earlier.joint(j)
        dx, dy = a.x - b.x, a.y - b.y
        norm = math.hypot(dx, dy)
        if norm <= cfg.epsilon_motion:
            continue
        direction = np.array([dx / norm, dy / norm])
        pts = np.empty((cfg.integral_samples, 2))
        pts[:, 0] = (1.0 - u) * a.x + u * b.x
        pts[:, 1] = (1.0 - u) * a.y + u * b.y
        channel = grid.channel_for(topo.joint_channel[j])
        vecs = sample_grid(grid, channel, pts, cfg.bilinear)
        total += float(np.sum(vecs @ direction)) / cfg.integral_samples
    return total / len(common)


def distance_score(pose_a: Pose, pose_b: Pose, sentinel: float = FORBIDDEN) -> float:
    """Mean Euclidean joint distance (pixels) over common joints."""
    common = common_joints(pose_a, pose_b)
    if not common:
        return sentinel
    total = 0.0
    for j in common:
        ca, cb = pose_a.joint(j), pose_b.joint(j)
        total += math.hypot(ca.x - cb.x, ca.y - cb.y)
    return total / len(common)


def association_score(s_flow: float, s_dist: float, cfg: ScoreConfig) -> float:
    """Linear combination of the flow similarity and distance similarity."""
    if s_flow == cfg.forbid_sentinel or s_dist == cfg.forbid_sentinel:
        return cfg.forbid_sentinel
    if not (math.isfinite(s_flow) and math.isfinite(s_dist)):
        return cfg.forbid_sentinel
    return cfg.alpha * s_flow + (1.0 - cfg.alpha) * math.exp(-s_dist / cfg.distance_scale)


@dataclass
class AssociationMatrix:
    """Pairwise association scores for one frame pair.

    Row i, column j holds the score of linking later-frame pose i to
    earlier-frame pose j, or the forbid sentinel where the pair shares no
    joints.
    """

    scores: np.ndarray  # (n_later, n_earlier) float64
    sentinel: float = FORBIDDEN

    @property
    def shape(self) -> tuple[int, int]:
        return self.scores.shape  # type: ignore[return-value]


def _poses_of(frame: "FramePoses | list[Pose] | tuple[Pose, ...]") -> list[Pose]:
    if isinstance(frame, FramePoses):
        return list(frame.poses)
    return list(frame)


def build_association_matrix(
    frame_later: "FramePoses | list[Pose]",
    frame_earlier: "FramePoses | list[Pose]",
    grid: FlowMapGrid,
    topo: SkeletonTopology,
    cfg: ScoreConfig,
) -> AssociationMatrix:
    """Score every (later pose, earlier pose) pair against one grid."""
    cfg.validate()
    later = _poses_of(frame_later)
    earlier = _poses_of(frame_earlier)
    scores = np.full((len(later), len(earlier)), cfg.forbid_sentinel, dtype=np.float64)
    for i, pl in enumerate(later):
        for j, pe in enumerate(earlier):
            s_flow = flow_score(pl, pe, grid, topo, cfg)
            s_dist = distance_score(pl, pe, cfg.forbid_sentinel)
            scores[i, j] = association_score(s_flow, s_dist, cfg)
    return AssociationMatrix(scores=scores, sentinel=cfg.forbid_sentinel)
