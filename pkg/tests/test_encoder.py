import math

import numpy as np
import pytest

from limbflow.encoder import (
    EncoderConfig,
    FlowMapAccumulator,
    LimbPart,
    accumulate_channels,
    encode_joint_flow,
    encode_limb_flow,
    grid_shape_for,
    limb_parts,
    part_unit_vector,
    rasterize_part,
    subdivide_limb,
)
from limbflow.pose import FramePoses, JointCandidate, Pose
from limbflow.skeleton import SkeletonTopology

from helpers import TOPO, brute_encode, frame, stick_pose, translate_pose

CFG = EncoderConfig()


# ------------------------------------------------------------ subdivide

def test_subdivide_two_parts():
    pts = subdivide_limb((0, 0), (0, 4), 2)
    assert pts.tolist() == [[0, 1], [0, 3]]


def test_subdivide_single_part_is_midpoint():
    assert subdivide_limb((0, 0), (6, 0), 1).tolist() == [[3, 0]]


def test_subdivide_twenty_parts_closed_form():
    pts = subdivide_limb((0, 0), (0, 20), 20)
    expected = [0.5 + i for i in range(20)]
    assert pts[:, 1].tolist() == expected
    assert np.all(pts[:, 0] == 0)


def test_subdivide_rejects_zero_parts():
    with pytest.raises(ValueError):
        subdivide_limb((0, 0), (1, 1), 0)


# ------------------------------------------------------------ unit vector

def test_unit_vector_axis():
    assert part_unit_vector((2, 0), (0, 0), 1e-6).tolist() == [1, 0]


def test_unit_vector_degenerate_is_zero():
    assert part_unit_vector((5, 5), (5, 5), 1e-6).tolist() == [0, 0]
    # anything at or below eps counts as no motion
    assert part_unit_vector((5 + 1e-7, 5), (5, 5), 1e-6).tolist() == [0, 0]


def test_unit_vector_345():
    v = part_unit_vector((3, 4), (0, 0), 1e-6)
    assert v == pytest.approx([0.6, 0.8])
    assert math.hypot(*v) == pytest.approx(1.0)


# ------------------------------------------------------------ rasterize

def _acc(channels=1, w=20, h=12):
    return FlowMapAccumulator(channels, w, h)


def test_rasterize_horizontal_segment():
    # cells strictly closer than 1 px to the segment (1,5)-(8,5): exactly
    # (x, 5) for 1 <= x <= 8; verified against the full-grid oracle below.
    acc = _acc()
    part = LimbPart((8, 5), (1, 5), 0, 0, 0)
    rasterize_part(acc, part, np.array([1.0, 0.0]), 1.0)
    hit = set(zip(*np.nonzero(acc.counts[0])))
    assert hit == {(5, x) for x in range(1, 9)}
    assert np.all(acc.sums[0, 5, 1:9] == [1.0, 0.0])


def test_rasterize_zero_length_segment():
    acc = _acc()
    rasterize_part(acc, LimbPart((6, 6), (6, 6), 0, 0, 0), np.array([0.0, 1.0]), 1.5)
    hit = set(zip(*np.nonzero(acc.counts[0])))
    for (y, x) in hit:
        assert math.hypot(x - 6, y - 6) < 1.5
    assert (6, 6) in hit


def test_rasterize_outside_grid_is_noop():
    acc = _acc()
    rasterize_part(acc, LimbPart((100, 100), (120, 100), 0, 0, 0), np.array([1.0, 0.0]), 2.0)
    assert acc.counts.sum() == 0
    assert np.all(acc.sums == 0)


def test_rasterize_clips_partially_outside():
    acc = _acc()
    rasterize_part(acc, LimbPart((30, 5), (-5, 5), 0, 0, 0), np.array([1.0, 0.0]), 1.0)
    assert acc.counts[0, 5, 0] == 1
    assert acc.counts[0, 5, 19] == 1


# ------------------------------------------------------------ encode

def _pair_frames(dx=6.0, dy=0.0, size=(200, 160)):
    earlier = stick_pose(90, 70)
    later = translate_pose(earlier, dx, dy)
    return frame([later], 1, size), frame([earlier], 0, size)


def test_encode_matches_brute_force():
    fl, fe = _pair_frames(7.0, -3.0)
    grid = encode_limb_flow(fl, fe, [(0, 0)], TOPO, CFG)
    vectors, counts = brute_encode(fl, fe, [(0, 0)], TOPO, CFG)
    assert np.array_equal(grid.counts, counts)
    assert np.abs(grid.vectors.astype(np.float64) - vectors).max() < 1e-6


def test_encode_opposite_motion_cancels():
    # person A sweeps base -> base+5 while person B sweeps base+5 -> base:
    # identical stroke cells, opposite unit vectors, so every painted cell
    # averages to exactly zero
    base = stick_pose(90, 70)
    ahead = translate_pose(base, 5, 0)
    fl = frame([ahead, base], 1)
    fe = frame([base, ahead], 0)
    grid = encode_limb_flow(fl, fe, [(0, 0), (1, 1)], TOPO, CFG)
    assert grid.counts.sum() > 0
    assert np.all(grid.vectors == 0)


def test_encode_identical_frames_all_zero():
    fl, fe = _pair_frames(0.0, 0.0)
    grid = encode_limb_flow(fl, fe, [(0, 0)], TOPO, CFG)
    assert np.all(grid.vectors == 0)
    assert grid.counts.sum() == 0


def test_encode_empty_pairing_zero_grid():
    fl, fe = _pair_frames()
    grid = encode_limb_flow(fl, fe, [], TOPO, CFG)
    assert np.all(grid.vectors == 0)


def test_encode_rejects_bad_pairing():
    fl, fe = _pair_frames()
    with pytest.raises(ValueError):
        encode_limb_flow(fl, fe, [(0, 5)], TOPO, CFG)


def test_encode_norm_bound_and_count_one_exact():
    rng = np.random.default_rng(7)
    for _ in range(10):
        base = stick_pose(float(rng.uniform(60, 140)), float(rng.uniform(50, 100)))
        moved = translate_pose(base, float(rng.uniform(-9, 9)), float(rng.uniform(-9, 9)))
        fl, fe = frame([moved], 1), frame([base], 0)
        grid = encode_limb_flow(fl, fe, [(0, 0)], TOPO, CFG)
        norms = np.sqrt((grid.vectors.astype(np.float64) ** 2).sum(-1))
        assert norms.max() <= 1 + 1e-9
        single = grid.counts == 1
        if single.any():
            assert norms[single].min() > 1 - 1e-6  # unit vectors, stored exactly


def test_encode_flip_antisymmetry():
    fl, fe = _pair_frames(6.0, 2.0)
    fwd = encode_limb_flow(fl, fe, [(0, 0)], TOPO, CFG)
    bwd = encode_limb_flow(fe, fl, [(0, 0)], TOPO, CFG)
    assert np.array_equal(fwd.vectors, -bwd.vectors)
    assert np.array_equal(fwd.counts, bwd.counts)


def test_encode_translation_equivariance():
    fl, fe = _pair_frames(6.0, 2.0)
    grid = encode_limb_flow(fl, fe, [(0, 0)], TOPO, CFG)
    dx, dy = 13, 9
    fl2 = frame([translate_pose(fl.poses[0], dx, dy)], 1)
    fe2 = frame([translate_pose(fe.poses[0], dx, dy)], 0)
    grid2 = encode_limb_flow(fl2, fe2, [(0, 0)], TOPO, CFG)
    h, w = grid.vectors.shape[1:3]
    # support translates exactly; values only to fp precision because the
    # displacement is re-derived from translated endpoints
    assert np.array_equal(
        grid.counts[:, : h - dy, : w - dx], grid2.counts[:, dy:, dx:]
    )
    assert np.abs(
        grid.vectors[:, : h - dy, : w - dx] - grid2.vectors[:, dy:, dx:]
    ).max() < 1e-12


def test_encode_stride_consistency():
    # depends only on the two frames passed, regardless of their context
    fl, fe = _pair_frames(5.0, 1.0)
    a = encode_limb_flow(fl, fe, [(0, 0)], TOPO, CFG)
    fl_copy = frame(list(fl.poses), 7, fl.image_size)
    fe_copy = frame(list(fe.poses), 3, fe.image_size)
    b = encode_limb_flow(fl_copy, fe_copy, [(0, 0)], TOPO, CFG)
    assert np.array_equal(a.vectors, b.vectors)


def test_encode_support_matches_oracle():
    rng = np.random.default_rng(21)
    for _ in range(5):
        base = stick_pose(float(rng.uniform(60, 130)), float(rng.uniform(50, 100)))
        moved = translate_pose(base, float(rng.uniform(-8, 8)), float(rng.uniform(-8, 8)))
        fl, fe = frame([moved], 1), frame([base], 0)
        grid = encode_limb_flow(fl, fe, [(0, 0)], TOPO, CFG)
        _, counts = brute_encode(fl, fe, [(0, 0)], TOPO, CFG)
        assert np.array_equal(grid.counts > 0, counts > 0)


def test_grid_stride_downsamples():
    fl, fe = _pair_frames(6.0, 0.0, size=(200, 160))
    cfg = EncoderConfig(grid_stride=4)
    grid = encode_limb_flow(fl, fe, [(0, 0)], TOPO, cfg)
    assert (grid.width, grid.height) == (50, 40)
    assert grid_shape_for((201, 160), 4) == (51, 40)


# ------------------------------------------------------------ accumulate

def test_accumulate_single_channel_passthrough():
    fl, fe = _pair_frames(6.0, 0.0)
    # keep only the two right-lower-arm joints so a single limb channel fires
    keep = {TOPO.joint_index("right_elbow"), TOPO.joint_index("right_wrist")}
    fl = frame([_keep(fl.poses[0], keep)], 1)
    fe = frame([_keep(fe.poses[0], keep)], 0)
    grid = encode_limb_flow(fl, fe, [(0, 0)], TOPO, CFG)
    fired = np.unique(np.nonzero(grid.counts)[0])
    assert len(fired) == 1
    acc = accumulate_channels(grid)
    assert acc.layout == "accumulated"
    assert acc.limb_count == TOPO.limb_count
    assert np.array_equal(acc.vectors[0], grid.vectors[fired[0]])


def _keep(pose, keep):
    return Pose(
        joints=tuple(c if j in keep else None for j, c in enumerate(pose.joints)),
        track_id=pose.track_id,
    )


def test_accumulate_opposing_channels_cancel():
    acc = FlowMapAccumulator(2, 8, 8)
    acc.add_stroke(0, (1, 4), (6, 4), np.array([1.0, 0.0]), 1.0)
    acc.add_stroke(1, (1, 4), (6, 4), np.array([-1.0, 0.0]), 1.0)
    grid = acc.finalize("individual", 2)
    out = accumulate_channels(grid)
    assert out.counts[0, 4, 3] == 2
    assert np.all(out.vectors[0, 4, 1:7] == 0)


def test_accumulate_empty_grid():
    grid = FlowMapAccumulator(3, 5, 5).finalize("individual", 3)
    out = accumulate_channels(grid)
    assert out.vectors.shape == (1, 5, 5, 2)
    assert np.all(out.vectors == 0)
    assert out.counts.sum() == 0


def test_accumulate_requires_individual():
    grid = FlowMapAccumulator(2, 5, 5).finalize("individual", 2)
    with pytest.raises(ValueError):
        accumulate_channels(accumulate_channels(grid))


# ------------------------------------------------------------ joint flow

def test_joint_flow_single_moving_joint():
    joints = [None] * 15
    joints[0] = JointCandidate(0, 8)
    earlier = Pose(joints=tuple(joints))
    later = translate_pose(earlier, 4, 0)
    fl, fe = frame([later], 1, (32, 24)), frame([earlier], 0, (32, 24))
    grid = encode_joint_flow(fl, fe, [(0, 0)], TOPO, CFG)
    assert grid.vectors.shape[0] == TOPO.joint_count
    hits = np.nonzero(grid.counts[0])
    assert set(zip(*hits)) == {(8, x) for x in range(0, 5)}
    assert np.all(grid.vectors[0, 8, 0:5] == [1.0, 0.0])
    assert grid.counts[1:].sum() == 0


def test_joint_flow_static_is_zero():
    p = stick_pose(50, 40)
    fl, fe = frame([p], 1, (128, 96)), frame([p], 0, (128, 96))
    grid = encode_joint_flow(fl, fe, [(0, 0)], TOPO, CFG)
    assert np.all(grid.vectors == 0)


def test_joint_flow_equals_degenerate_limb_topology():
    # a topology whose "limbs" are zero-length self-loops at each joint,
    # encoded with one part per limb, reproduces the joint-flow map
    degenerate = SkeletonTopology(
        name="selfloops",
        joint_names=TOPO.joint_names,
        limbs=tuple((j, j) for j in range(15)),
        joint_channel=tuple(range(15)),
        head_segment=(0, 2),
    )
    earlier = stick_pose(80, 60)
    later = translate_pose(earlier, 5, -4)
    fl, fe = frame([later], 1), frame([earlier], 0)
    jf = encode_joint_flow(fl, fe, [(0, 0)], TOPO, CFG)
    cfg1 = EncoderConfig(parts_per_limb=1)
    lf = encode_limb_flow(fl, fe, [(0, 0)], degenerate, cfg1)
    assert np.array_equal(jf.vectors, lf.vectors)
    assert np.array_equal(jf.counts, lf.counts)


# ------------------------------------------------------------ parts

def test_limb_parts_enumeration():
    fl, fe = _pair_frames(6.0, 0.0)
    parts = limb_parts(fl, fe, [(0, 0)], TOPO, CFG)
    assert len(parts) == TOPO.limb_count * CFG.parts_per_limb
    assert {p.limb_index for p in parts} == set(range(TOPO.limb_count))
    for p in parts:
        assert p.stroke_length() == pytest.approx(6.0)


def test_limb_parts_skip_missing_joints():
    fl, fe = _pair_frames(6.0, 0.0)
    incomplete = _keep(fl.poses[0], set(range(14)))  # drop left_ankle
    parts = limb_parts(frame([incomplete], 1), fe, [(0, 0)], TOPO, CFG)
    # left shin (13, 14) cannot be encoded
    assert {p.limb_index for p in parts} == set(range(TOPO.limb_count)) - {13}
