"""Limb-motion flow-map encoding.

A flow map is a grid of 2D vectors describing the direction limbs moved
between two frames. Each limb is subdivided into short parts at regular
intervals; every part contributes its unit motion vector to all grid
cells swept by the thick stroke between the part's two anchor positions.
Overlapping contributions, whether from one person or several, are
averaged with a single contributor count per cell, which keeps every
stored vector inside the unit disc.

Conventions, fixed here and relied on by the scorer:

* Vectors point from the earlier frame toward the later one (along
  motion). Callers pass the chronologically later frame first.
* Grid cell (ix, iy) has its center at pixel (ix * stride, iy * stride).
* A cell belongs to a stroke iff its center is strictly closer than
  ``stroke_half_width`` to the anchor segment. Plain distance test, no
  anti-aliasing, for bit-reproducibility across platforms.
* Displacements of at most ``epsilon_motion`` have no defined direction
  and contribute nothing.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .pose import FramePoses
from .skeleton import SkeletonTopology

LAYOUT_INDIVIDUAL = "individual"
LAYOUT_ACCUMULATED = "accumulated"


@dataclass(frozen=True)
class EncoderConfig:
    parts_per_limb: int = 20
    stroke_half_width: float = 1.0
    epsilon_motion: float = 1e-6
    layout: str = LAYOUT_INDIVIDUAL
    grid_stride: int = 1

    def validate(self) -> None:
        if self.parts_per_limb < 1:
            raise ValueError("parts_per_limb must be >= 1")
        if not self.stroke_half_width > 0:
            raise ValueError("stroke_half_width must be > 0")
        if self.epsilon_motion < 0:
            raise ValueError("epsilon_motion must be >= 0")
        if self.layout not in (LAYOUT_INDIVIDUAL, LAYOUT_ACCUMULATED):
            raise ValueError(f"unknown layout {self.layout!r}")
        if self.grid_stride < 1:
            raise ValueError("grid_stride must be >= 1")


@dataclass(frozen=True)
class LimbPart:
    """One subdivision of a limb, anchored in both frames."""

    anchor_later: tuple[float, float]
    anchor_earlier: tuple[float, float]
    part_index: int
    limb_index: int
    person_index: int

    def stroke_length(self) -> float:
        ax, ay = self.anchor_later
        bx, by = self.anchor_earlier
        return math.hypot(ax - bx, ay - by)


@dataclass
class FlowMapGrid:
    """A finalized flow-map grid.

    ``vectors`` has shape (channel_pairs, height, width, 2), float64 in
    memory (the dump format stores float32); channel_pairs equals
    ``limb_count`` for the individual layout and 1 for the accumulated
    layout. ``counts`` records how many contributions each cell received
    (per channel); it is kept for auditability and is not serialized, so
    grids loaded from disk carry ``counts=None``. ``limb_count`` always
    records the source channel count, even after accumulation, so the
    dump format round-trips bit-exactly.
    """

    layout: str
    limb_count: int
    width: int
    height: int
    vectors: np.ndarray
    counts: Optional[np.ndarray]
    grid_stride: int = 1

    @property
    def channel_pairs(self) -> int:
        return int(self.vectors.shape[0])

    def channel_for(self, limb_channel: int) -> int:
        """Map a topology limb channel to a stored channel index."""
        if self.layout == LAYOUT_ACCUMULATED:
            return 0
        return limb_channel

    def max_norm(self) -> float:
        if self.vectors.size == 0:
            return 0.0
        return float(np.sqrt((self.vectors.astype(np.float64) ** 2).sum(axis=-1)).max())


def grid_shape_for(image_size: tuple[int, int], grid_stride: int) -> tuple[int, int]:
    """(width_cells, height_cells) covering an image at the given stride."""
    w, h = image_size
    return (max(1, math.ceil(w / grid_stride)), max(1, math.ceil(h / grid_stride)))


def subdivide_limb(
    joint_a: tuple[float, float], joint_b: tuple[float, float], n: int
) -> np.ndarray:
    """Anchor points of n equal limb parts, at the midpoint of each part.

    Anchor i sits at ``joint_a + ((i + 0.5) / n) * (joint_b - joint_a)``;
    n anchors for n parts, no double-counted endpoints.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    a = np.asarray(joint_a, dtype=np.float64)
    b = np.asarray(joint_b, dtype=np.float64)
    frac = (np.arange(n, dtype=np.float64) + 0.5) / n
    return a[None, :] + frac[:, None] * (b - a)[None, :]


def part_unit_vector(
    s_later: tuple[float, float], s_earlier: tuple[float, float], eps: float
) -> np.ndarray:
    """Unit vector from the earlier anchor to the later one.

    Displacements of norm <= eps have no direction and yield the zero
    vector.
    """
    d = np.asarray(s_later, dtype=np.float64) - np.asarray(s_earlier, dtype=np.float64)
    norm = float(np.hypot(d[0], d[1]))
    if norm <= eps:
        return np.zeros(2, dtype=np.float64)
    return d / norm


class FlowMapAccumulator:
    """Mutable sum/count buffers a grid is rasterized into.

    Not safe for concurrent writers; encode each frame pair into its own
    accumulator.
    """

    def __init__(self, channels: int, width: int, height: int, grid_stride: int = 1):
        self.width = width
        self.height = height
        self.grid_stride = grid_stride
        self.sums = np.zeros((channels, height, width, 2), dtype=np.float64)
        self.counts = np.zeros((channels, height, width), dtype=np.int32)

    def add_stroke(
        self,
        channel: int,
        a: tuple[float, float],
        b: tuple[float, float],
        vector: np.ndarray,
        half_width: float,
    ) -> None:
        """Add one contribution of ``vector`` to every cell whose center is
        strictly within ``half_width`` of segment (a, b).

        Strokes reaching outside the grid are clipped, never an error.
        """
        v = np.asarray(vector, dtype=np.float64)
        self.add_strokes(
            channel,
            np.array([a], dtype=np.float64),
            np.array([b], dtype=np.float64),
            v[None, :],
            half_width,
        )

    def add_strokes(
        self,
        channel: int,
        a: np.ndarray,
        b: np.ndarray,
        vectors: np.ndarray,
        half_width: float,
    ) -> None:
        """Vectorized ``add_stroke`` for n segments sharing one channel.

        Each segment contributes independently; cells covered by several
        segments receive several contributions, exactly as repeated
        ``add_stroke`` calls would produce.
        """
        if len(a) == 0:
            return
        s = float(self.grid_stride)
        hw2 = half_width * half_width
        lo = np.minimum(a, b).min(axis=0) - half_width
        hi = np.maximum(a, b).max(axis=0) + half_width
        ix0 = max(0, int(math.floor(lo[0] / s)))
        ix1 = min(self.width - 1, int(math.ceil(hi[0] / s)))
        iy0 = max(0, int(math.floor(lo[1] / s)))
        iy1 = min(self.height - 1, int(math.ceil(hi[1] / s)))
        if ix0 > ix1 or iy0 > iy1:
            return
        xs = np.arange(ix0, ix1 + 1, dtype=np.float64) * s
        ys = np.arange(iy0, iy1 + 1, dtype=np.float64) * s
        px, py = np.meshgrid(xs, ys)  # (ny, nx)

        d = b - a  # (n, 2)
        seg_len2 = (d * d).sum(axis=1)  # (n,)
        safe_len2 = np.where(seg_len2 > 0.0, seg_len2, 1.0)
        rel_x = px[None, :, :] - a[:, 0, None, None]
        rel_y = py[None, :, :] - a[:, 1, None, None]
        t = (rel_x * d[:, 0, None, None] + rel_y * d[:, 1, None, None]) / safe_len2[:, None, None]
        np.clip(t, 0.0, 1.0, out=t)
        t[seg_len2 == 0.0] = 0.0
        qx = rel_x - t * d[:, 0, None, None]
        qy = rel_y - t * d[:, 1, None, None]
        mask = qx * qx + qy * qy < hw2  # (n, ny, nx)
        if not mask.any():
            return
        counts = mask.sum(axis=0)
        sums = np.einsum("nyx,nc->yxc", mask, vectors)
        self.sums[channel, iy0 : iy1 + 1, ix0 : ix1 + 1] += sums
        self.counts[channel, iy0 : iy1 + 1, ix0 : ix1 + 1] += counts.astype(np.int32)

    def finalize(self, layout: str, limb_count: int) -> FlowMapGrid:
        means = np.zeros(self.sums.shape, dtype=np.float64)
        nz = self.counts > 0
        if nz.any():
            means[nz] = self.sums[nz] / self.counts[nz][:, None]
        return FlowMapGrid(
            layout=layout,
            limb_count=limb_count,
            width=self.width,
            height=self.height,
            vectors=means,
            counts=self.counts.copy(),
            grid_stride=self.grid_stride,
        )


def rasterize_part(
    acc: FlowMapAccumulator, part: LimbPart, vector: np.ndarray, half_width: float
) -> None:
    """Rasterize one limb part's stroke into its limb channel."""
    acc.add_stroke(part.limb_index, part.anchor_later, part.anchor_earlier, vector, half_width)


def limb_parts(
    frame_later: FramePoses,
    frame_earlier: FramePoses,
    pairing: list[tuple[int, int]],
    topo: SkeletonTopology,
    cfg: EncoderConfig,
) -> list[LimbPart]:
    """Enumerate part strokes for every paired person and encodable limb.

    A limb is encodable when both endpoint joints are present and visible
    in both frames.
    """
    parts: list[LimbPart] = []
    n = cfg.parts_per_limb
    for later_idx, earlier_idx in pairing:
        pl = frame_later.poses[later_idx]
        pe = frame_earlier.poses[earlier_idx]
        for l, (ja, jb) in enumerate(topo.limbs):
            quad = (pl.joint(ja), pl.joint(jb), pe.joint(ja), pe.joint(jb))
            if any(c is None or not c.visible for c in quad):
                continue
            anchors_later = subdivide_limb(quad[0].xy(), quad[1].xy(), n)
            anchors_earlier = subdivide_limb(quad[2].xy(), quad[3].xy(), n)
            for k in range(n):
                parts.append(
                    LimbPart(
                        anchor_later=(anchors_later[k, 0], anchors_later[k, 1]),
                        anchor_earlier=(anchors_earlier[k, 0], anchors_earlier[k, 1]),
                        part_index=k,
                        limb_index=l,
                        person_index=later_idx,
                    )
                )
    return parts


def _check_encode_inputs(
    frame_later: FramePoses,
    frame_earlier: FramePoses,
    pairing: list[tuple[int, int]],
) -> None:
    if frame_later.image_size != frame_earlier.image_size:
        raise ValueError("frames must share image_size")
    for li, ei in pairing:
        if not (0 <= li < len(frame_later.poses)):
            raise ValueError(f"pairing index {li} out of range in later frame")
        if not (0 <= ei < len(frame_earlier.poses)):
            raise ValueError(f"pairing index {ei} out of range in earlier frame")


def encode_limb_flow(
    frame_later: FramePoses,
    frame_earlier: FramePoses,
    pairing: list[tuple[int, int]],
    topo: SkeletonTopology,
    cfg: EncoderConfig,
) -> FlowMapGrid:
    """Encode the flow-map grid for one frame pair.

    ``pairing`` lists (person_in_later_frame, person_in_earlier_frame)
    correspondences whose motion is drawn; an empty pairing encodes an
    all-zero grid. Identical frames encode exactly zero everywhere (the
    epsilon rule removes zero-motion parts, which also keeps static limbs
    from diluting moving ones at shared cells).
    """
    cfg.validate()
    _check_encode_inputs(frame_later, frame_earlier, pairing)
    width, height = grid_shape_for(frame_later.image_size, cfg.grid_stride)
    acc = FlowMapAccumulator(topo.limb_count, width, height, cfg.grid_stride)
    n = cfg.parts_per_limb
    for later_idx, earlier_idx in pairing:
        pl = frame_later.poses[later_idx]
        pe = frame_earlier.poses[earlier_idx]
        for l, (ja, jb) in enumerate(topo.limbs):
            quad = (pl.joint(ja), pl.joint(jb), pe.joint(ja), pe.joint(jb))
            if any(c is None or not c.visible for c in quad):
                continue
            anchors_later = subdivide_limb(quad[0].xy(), quad[1].xy(), n)
            anchors_earlier = subdivide_limb(quad[2].xy(), quad[3].xy(), n)
            disp = anchors_later - anchors_earlier
            norms = np.hypot(disp[:, 0], disp[:, 1])
            moving = norms > cfg.epsilon_motion
            if not moving.any():
                continue
            vectors = disp[moving] / norms[moving, None]
            acc.add_strokes(
                l,
                anchors_later[moving],
                anchors_earlier[moving],
                vectors,
                cfg.stroke_half_width,
            )
    grid = acc.finalize(LAYOUT_INDIVIDUAL, topo.limb_count)
    if cfg.layout == LAYOUT_ACCUMULATED:
        return accumulate_channels(grid)
    return grid


def accumulate_channels(grid: FlowMapGrid) -> FlowMapGrid:
    """Collapse an individual-layout grid to a single accumulated channel.

    Per cell, the mean over channels with a nonzero contributor count.
    Opposing motion of different limbs at the same cell averages out,
    which is exactly the information loss the individual layout avoids.
    """
    if grid.layout != LAYOUT_INDIVIDUAL:
        raise ValueError("accumulate_channels expects an individual-layout grid")
    if grid.counts is not None:
        contributing = grid.counts > 0
    else:
        # Loaded grids have no counts; fall back to nonzero vectors.
        contributing = np.any(grid.vectors != 0, axis=-1)
    n_chan = contributing.sum(axis=0)
    sums = np.where(contributing[..., None], grid.vectors.astype(np.float64), 0.0).sum(axis=0)
    means = sums / np.maximum(n_chan, 1)[..., None]
    means[n_chan == 0] = 0.0
    return FlowMapGrid(
        layout=LAYOUT_ACCUMULATED,
        limb_count=grid.limb_count,
        width=grid.width,
        height=grid.height,
        vectors=means[None, ...],
        counts=n_chan[None, ...].astype(np.int32),
        grid_stride=grid.grid_stride,
    )


def encode_joint_flow(
    frame_later: FramePoses,
    frame_earlier: FramePoses,
    pairing: list[tuple[int, int]],
    topo: SkeletonTopology,
    cfg: EncoderConfig,
) -> FlowMapGrid:
    """Joint-location baseline: one stroke per joint instead of per limb part.

    Channels are keyed by joint index, so the grid carries
    ``topo.joint_count`` channel pairs. Equivalent to encoding a
    degenerate topology whose limbs are zero-length at each joint with
    one part per limb.
    """
    cfg.validate()
    _check_encode_inputs(frame_later, frame_earlier, pairing)
    width, height = grid_shape_for(frame_later.image_size, cfg.grid_stride)
    acc = FlowMapAccumulator(topo.joint_count, width, height, cfg.grid_stride)
    for later_idx, earlier_idx in pairing:
        pl = frame_later.poses[later_idx]
        pe = frame_earlier.poses[earlier_idx]
        for j in range(topo.joint_count):
            cl, ce = pl.joint(j), pe.joint(j)
            if cl is None or ce is None or not cl.visible or not ce.visible:
                continue
            v = part_unit_vector(cl.xy(), ce.xy(), cfg.epsilon_motion)
            if v[0] != 0.0 or v[1] != 0.0:
                acc.add_stroke(j, cl.xy(), ce.xy(), v, cfg.stroke_half_width)
    grid = acc.finalize(LAYOUT_INDIVIDUAL, topo.joint_count)
    if cfg.layout == LAYOUT_ACCUMULATED:
        return accumulate_channels(grid)
    return grid
