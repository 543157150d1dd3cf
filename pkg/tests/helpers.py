"""Shared test fixtures and independent oracles.

Oracles here deliberately re-derive results through a different path
than the library (full-grid scans, exhaustive enumeration, hand
arithmetic) so tests compare two implementations, not one with itself.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import replace

import numpy as np

from limbflow.encoder import EncoderConfig, grid_shape_for
from limbflow.pose import FramePoses, JointCandidate, Pose, Sequence
from limbflow.skeleton import SkeletonTopology, default_topology
from limbflow.synth import SceneConfig, apply_corruption, generate_sequence

TOPO = default_topology()


# ---------------------------------------------------------------- poses

STICK_OFFSETS = [
    (0.0, -0.24), (0.0, -0.12), (0.0, 0.0),
    (-0.15, 0.02), (-0.16, 0.19), (-0.17, 0.35),
    (0.15, 0.02), (0.16, 0.19), (0.17, 0.35),
    (-0.09, 0.40), (-0.10, 0.61), (-0.11, 0.82),
    (0.09, 0.40), (0.10, 0.61), (0.11, 0.82),
]


def stick_pose(cx: float, cy: float, h: float = 50.0, track_id=None, confidence=1.0) -> Pose:
    joints = tuple(
        JointCandidate(cx + ox * h, cy + oy * h, confidence=confidence)
        for ox, oy in STICK_OFFSETS
    )
    return Pose(joints=joints, track_id=track_id)


def translate_pose(pose: Pose, dx: float, dy: float) -> Pose:
    joints = tuple(
        None if c is None else replace(c, x=c.x + dx, y=c.y + dy) for c in pose.joints
    )
    return replace(pose, joints=joints)


def partial_pose(pose: Pose, keep: set[int]) -> Pose:
    joints = tuple(c if j in keep else None for j, c in enumerate(pose.joints))
    return replace(pose, joints=joints)


def frame(poses, index=0, size=(200, 160)) -> FramePoses:
    return FramePoses(frame_index=index, poses=tuple(poses), image_size=size)


# ------------------------------------------------- brute-force encoder

def brute_encode(frame_later, frame_earlier, pairing, topo, cfg: EncoderConfig):
    """Full-grid recomputation of the limb flow map.

    Scans every cell against every part stroke (no bounding boxes, no
    batching) and averages contributions; returns (vectors f64, counts).
    """
    width, height = grid_shape_for(frame_later.image_size, cfg.grid_stride)
    s = float(cfg.grid_stride)
    ys, xs = np.mgrid[0:height, 0:width]
    px = xs * s
    py = ys * s
    sums = np.zeros((topo.limb_count, height, width, 2))
    counts = np.zeros((topo.limb_count, height, width), dtype=np.int64)
    hw2 = cfg.stroke_half_width**2
    n = cfg.parts_per_limb
    for li, ei in pairing:
        pl = frame_later.poses[li]
        pe = frame_earlier.poses[ei]
        for l, (ja, jb) in enumerate(topo.limbs):
            quad = (pl.joint(ja), pl.joint(jb), pe.joint(ja), pe.joint(jb))
            if any(c is None or not c.visible for c in quad):
                continue
            for k in range(n):
                f = (k + 0.5) / n
                ax = quad[0].x + f * (quad[1].x - quad[0].x)
                ay = quad[0].y + f * (quad[1].y - quad[0].y)
                bx = quad[2].x + f * (quad[3].x - quad[2].x)
                by = quad[2].y + f * (quad[3].y - quad[2].y)
                dx, dy = ax - bx, ay - by
                norm = math.hypot(dx, dy)
                if norm <= cfg.epsilon_motion:
                    continue
                seg_dx, seg_dy = bx - ax, by - ay
                len2 = seg_dx * seg_dx + seg_dy * seg_dy
                rel_x = px - ax
                rel_y = py - ay
                if len2 > 0:
                    t = np.clip((rel_x * seg_dx + rel_y * seg_dy) / len2, 0.0, 1.0)
                else:
                    t = np.zeros_like(rel_x)
                qx = rel_x - t * seg_dx
                qy = rel_y - t * seg_dy
                mask = qx * qx + qy * qy < hw2
                sums[l][mask] += np.array([dx / norm, dy / norm])
                counts[l][mask] += 1
    vectors = np.zeros_like(sums)
    nz = counts > 0
    vectors[nz] = sums[nz] / counts[nz][:, None]
    return vectors, counts


# ------------------------------------------ brute-force assignment

def brute_force_assignment(scores: np.ndarray, forbidden=float("-inf")):
    """Exhaustive best assignment: max cardinality, then max total.

    Returns (pairs, total). Rows <= 8 expected.
    """
    scores = np.asarray(scores, dtype=float)
    n_rows, n_cols = scores.shape
    feasible = np.isfinite(scores) & (scores != forbidden)
    best = ([], 0, -math.inf)  # pairs, cardinality, total

    rows = list(range(n_rows))

    def recurse(idx, used_cols, pairs, total):
        nonlocal best
        if idx == n_rows:
            card = len(pairs)
            if card > best[1] or (card == best[1] and total > best[2] + 1e-15):
                best = (list(pairs), card, total)
            return
        i = rows[idx]
        recurse(idx + 1, used_cols, pairs, total)  # leave row unmatched
        for j in range(n_cols):
            if j not in used_cols and feasible[i, j]:
                pairs.append((i, j))
                recurse(idx + 1, used_cols | {j}, pairs, total + scores[i, j])
                pairs.pop()

    recurse(0, frozenset(), [], 0.0)
    return sorted(best[0]), best[2]


def brute_best_permutation(scores: np.ndarray):
    """Best total over full permutations of a square matrix."""
    n = scores.shape[0]
    best, best_perm = -math.inf, None
    for perm in itertools.permutations(range(n)):
        total = sum(scores[i, perm[i]] for i in range(n))
        if total > best:
            best, best_perm = total, perm
    return best_perm, best


# ------------------------------------------------- scene constructions

def association_scene(seed: int):
    """3-6 separated stick people with displacement directions >= 30 deg apart.

    Returns (frame_earlier, frame_later, n_people); person i in the later
    frame is person i translated along its own direction.
    """
    rng = np.random.default_rng(seed)
    n = int(rng.integers(3, 7))
    spacing = 360.0 / n
    jit = (spacing - 30.0) / 2.0
    angles = [
        math.radians(i * spacing + float(rng.uniform(-jit, jit))) for i in range(n)
    ]
    size = (420, 300)
    cols = math.ceil(math.sqrt(n))
    poses1, poses2 = [], []
    for i in range(n):
        gx, gy = i % cols, i // cols
        cx = 80.0 + gx * 120 + float(rng.uniform(-10, 10))
        cy = 70.0 + gy * 110 + float(rng.uniform(-10, 10))
        h = float(rng.uniform(45, 60))
        r = float(rng.uniform(8, 16))
        pose = stick_pose(cx, cy, h)
        poses1.append(pose)
        poses2.append(translate_pose(pose, r * math.cos(angles[i]), r * math.sin(angles[i])))
    return frame(poses1, 0, size), frame(poses2, 1, size), n


def crossing_benchmark_config(seed: int) -> SceneConfig:
    """Scene config of the distance-vs-flow ablation benchmark."""
    return SceneConfig(
        people=2,
        frames=9,
        image_size=(224, 128),
        motion="crossing",
        speed=14.0,
        jitter_sigma=2.0,
        seed=seed,
    )


BENCH_ENCODER = EncoderConfig(stroke_half_width=2.5)


def limb_aliasing_scene(seed: int):
    """Two crossing people with one shifted so different limbs of the two
    overlap with opposing motion (the accumulated layout's failure mode).

    Person 1 is lowered until its hip band rides halfway down person 0's
    thigh, so thigh/shin/arm bands of the two interleave while
    same-channel strips stay apart. Returns (gt, candidates).
    """
    cfg = SceneConfig(
        people=2,
        frames=9,
        image_size=(256, 160),
        motion="crossing",
        speed=20.0,
        jitter_sigma=2.5,
        seed=seed,
    )
    gt = generate_sequence(cfg)
    topo = gt.topology
    rk = topo.joint_index("right_knee")
    rh = topo.joint_index("right_hip")
    p0 = gt.frames[0].poses[0]
    p1 = gt.frames[0].poses[1]
    dy = (p0.joints[rh].y - p1.joints[rh].y) + 0.5 * (p0.joints[rk].y - p0.joints[rh].y)
    frames = []
    for f in gt.frames:
        poses = []
        for p in f.poses:
            if p.track_id == 1:
                joints = tuple(
                    None if c is None else replace(c, y=c.y + dy) for c in p.joints
                )
                poses.append(replace(p, joints=joints))
            else:
                poses.append(p)
        frames.append(replace(f, poses=tuple(poses)))
    shifted = Sequence(frames=tuple(frames), topology=topo)
    assert not any(f.out_of_bounds_joints() for f in shifted.frames)
    return shifted, apply_corruption(shifted, cfg)


# ------------------------------------------------- misc oracles

def connected_components(n_nodes: int, edges) -> int:
    """BFS component count, independent of the library's union-find."""
    adj = {i: [] for i in range(n_nodes)}
    for a, b in edges:
        if 0 <= a < n_nodes and 0 <= b < n_nodes:
            adj[a].append(b)
            adj[b].append(a)
    seen = set()
    comps = 0
    for start in range(n_nodes):
        if start in seen:
            continue
        comps += 1
        queue = [start]
        seen.add(start)
        while queue:
            cur = queue.pop()
            for nxt in adj[cur]:
                if nxt not in seen:
                    seen.add(nxt)
                    queue.append(nxt)
    return comps
