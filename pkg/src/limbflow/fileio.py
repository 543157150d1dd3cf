"""Bit-specified file formats: annotations, flow-map dumps, run configs.

Annotations are canonical JSON: keys sorted, floats in shortest
round-trip decimal form, compact separators, newline-terminated. Parsing
then serializing any valid document reproduces its canonical form
byte-for-byte.

Flow-map dumps ("TMLF") are little-endian binary:

    magic  "TMLF"          4 bytes
    version                u16
    layout                 u8   (0 = individual, 1 = accumulated)
    limb_count             u16  (source channel count)
    width, height          u32, u32  (cells)
    planes                 float32[] channel-major, x-plane then y-plane
                           per channel; individual grids carry
                           2*limb_count planes, accumulated grids 2

Contributor counts are in-memory audit data and are not serialized. The
dump carries no grid stride; readers assume one cell per pixel.
"""

from __future__ import annotations

import json
import struct
from typing import Optional

import numpy as np

from .encoder import LAYOUT_ACCUMULATED, LAYOUT_INDIVIDUAL, FlowMapGrid
from .pose import FramePoses, JointCandidate, Pose, Sequence
from .skeleton import SkeletonTopology, resolve_topology

FORMAT_VERSION = 1
TMLF_MAGIC = b"TMLF"
TMLF_VERSION = 1
_HEADER = struct.Struct("<4sHBHII")


class AnnotationError(ValueError):
    """Structured parse error naming the offending field."""

    def __init__(self, message: str, where: str = ""):
        self.where = where
        super().__init__(f"{where}: {message}" if where else message)


class FlowmapFormatError(ValueError):
    pass


def sequence_to_document(seq) -> dict:
    """Plain-data document for a Sequence or TrackedSequence."""
    frames = []
    for frame in seq.frames:
        poses = []
        for pose in frame.poses:
            joints = []
            for j, c in enumerate(pose.joints):
                if c is None:
                    continue
                joints.append(
                    {
                        "joint_index": j,
                        "x": float(c.x),
                        "y": float(c.y),
                        "confidence": float(c.confidence),
                        "visible": bool(c.visible),
                    }
                )
            entry: dict = {"joints": joints}
            if pose.track_id is not None:
                entry["track_id"] = int(pose.track_id)
            poses.append(entry)
        frames.append(
            {
                "frame_index": int(frame.frame_index),
                "image_size": [int(frame.image_size[0]), int(frame.image_size[1])],
                "poses": poses,
            }
        )
    return {
        "version": FORMAT_VERSION,
        "topology": seq.topology.name,
        "frames": frames,
    }


def canonical_json(document: dict) -> str:
    return json.dumps(document, sort_keys=True, separators=(",", ":")) + "\n"


def serialize_annotations(seq) -> str:
    return canonical_json(sequence_to_document(seq))


def write_annotations(seq, path: str) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(serialize_annotations(seq))


def _expect(cond: bool, message: str, where: str) -> None:
    if not cond:
        raise AnnotationError(message, where)


def _parse_joint(obj, joint_count: int, where: str) -> tuple[int, JointCandidate]:
    _expect(isinstance(obj, dict), "joint entry must be an object", where)
    try:
        j = obj["joint_index"]
        x = obj["x"]
        y = obj["y"]
    except KeyError as exc:
        raise AnnotationError(f"missing field {exc}", where) from exc
    _expect(isinstance(j, int) and not isinstance(j, bool), "joint_index must be an integer", where)
    _expect(0 <= j < joint_count, f"joint index out of range: {j}", where)
    for name, value in (("x", x), ("y", y)):
        _expect(
            isinstance(value, (int, float)) and not isinstance(value, bool),
            f"malformed number for {name!r}",
            where,
        )
        _expect(np.isfinite(value), f"{name!r} must be finite", where)
    confidence = obj.get("confidence", 1.0)
    _expect(
        isinstance(confidence, (int, float)) and not isinstance(confidence, bool),
        "malformed number for 'confidence'",
        where,
    )
    _expect(0.0 <= confidence <= 1.0, "confidence must be in [0, 1]", where)
    visible = obj.get("visible", True)
    _expect(isinstance(visible, bool), "visible must be a boolean", where)
    return j, JointCandidate(float(x), float(y), float(confidence), visible)


def document_to_sequence(document: dict, topology: Optional[SkeletonTopology] = None) -> Sequence:
    _expect(isinstance(document, dict), "document must be an object", "$")
    _expect(document.get("version") == FORMAT_VERSION, f"unsupported version {document.get('version')!r}", "$.version")
    topo_name = document.get("topology")
    if topology is None:
        _expect(isinstance(topo_name, str), "topology must be a string", "$.topology")
        try:
            topology = resolve_topology(topo_name)
        except KeyError as exc:
            raise AnnotationError(str(exc), "$.topology") from exc
    frames_doc = document.get("frames")
    _expect(isinstance(frames_doc, list), "frames must be a list", "$.frames")

    frames = []
    prev_index = None
    for fi, fdoc in enumerate(frames_doc):
        where = f"$.frames[{fi}]"
        _expect(isinstance(fdoc, dict), "frame must be an object", where)
        idx = fdoc.get("frame_index")
        _expect(isinstance(idx, int) and not isinstance(idx, bool), "frame_index must be an integer", where)
        _expect(idx >= 0, "frame_index must be non-negative", where)
        if prev_index is not None:
            _expect(idx > prev_index, "frame indices must be strictly increasing", where)
        prev_index = idx
        size = fdoc.get("image_size")
        _expect(
            isinstance(size, list) and len(size) == 2 and all(isinstance(v, int) and v > 0 for v in size),
            "image_size must be [width, height] of positive integers",
            where,
        )
        poses = []
        for pi, pdoc in enumerate(fdoc.get("poses", [])):
            pwhere = f"{where}.poses[{pi}]"
            _expect(isinstance(pdoc, dict), "pose must be an object", pwhere)
            track_id = pdoc.get("track_id")
            if track_id is not None:
                _expect(
                    isinstance(track_id, int) and not isinstance(track_id, bool) and track_id >= 0,
                    "track_id must be a non-negative integer",
                    pwhere,
                )
            joints: list[Optional[JointCandidate]] = [None] * topology.joint_count
            for ji, jdoc in enumerate(pdoc.get("joints", [])):
                j, cand = _parse_joint(jdoc, topology.joint_count, f"{pwhere}.joints[{ji}]")
                _expect(joints[j] is None, f"duplicate joint_index {j}", f"{pwhere}.joints[{ji}]")
                joints[j] = cand
            poses.append(Pose(joints=tuple(joints), track_id=track_id))
        frames.append(
            FramePoses(frame_index=idx, poses=tuple(poses), image_size=(size[0], size[1]))
        )
    try:
        return Sequence(frames=tuple(frames), topology=topology)
    except ValueError as exc:
        raise AnnotationError(str(exc), "$.frames") from exc


def parse_annotations(text: str, topology: Optional[SkeletonTopology] = None) -> Sequence:
    try:
        document = json.loads(text)
    except json.JSONDecodeError as exc:
        raise AnnotationError(f"invalid JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}") from exc
    return document_to_sequence(document, topology)


def read_annotations(path: str, topology: Optional[SkeletonTopology] = None) -> Sequence:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_annotations(fh.read(), topology)


def flowmap_to_bytes(grid: FlowMapGrid) -> bytes:
    if grid.layout == LAYOUT_INDIVIDUAL:
        layout_byte = 0
        expected = grid.limb_count
    elif grid.layout == LAYOUT_ACCUMULATED:
        layout_byte = 1
        expected = 1
    else:
        raise FlowmapFormatError(f"unknown layout {grid.layout!r}")
    if grid.vectors.shape != (expected, grid.height, grid.width, 2):
        raise FlowmapFormatError(
            f"vectors shape {grid.vectors.shape} does not match "
            f"{(expected, grid.height, grid.width, 2)}"
        )
    header = _HEADER.pack(
        TMLF_MAGIC, TMLF_VERSION, layout_byte, grid.limb_count, grid.width, grid.height
    )
    planes = np.ascontiguousarray(
        grid.vectors.astype("<f4", copy=False).transpose(0, 3, 1, 2)
    )
    return header + planes.tobytes()


def flowmap_from_bytes(data: bytes) -> FlowMapGrid:
    if len(data) < _HEADER.size:
        raise FlowmapFormatError("truncated header")
    magic, version, layout_byte, limb_count, width, height = _HEADER.unpack_from(data)
    if magic != TMLF_MAGIC:
        raise FlowmapFormatError("not a TMLF file")
    if version != TMLF_VERSION:
        raise FlowmapFormatError(f"unsupported format version {version}")
    if layout_byte == 0:
        layout = LAYOUT_INDIVIDUAL
        pairs = limb_count
    elif layout_byte == 1:
        layout = LAYOUT_ACCUMULATED
        pairs = 1
    else:
        raise FlowmapFormatError(f"unknown layout byte {layout_byte}")
    expected = _HEADER.size + pairs * 2 * width * height * 4
    if len(data) != expected:
        raise FlowmapFormatError(
            f"payload is {len(data) - _HEADER.size} bytes, expected {expected - _HEADER.size}"
        )
    planes = np.frombuffer(data, dtype="<f4", offset=_HEADER.size)
    planes = planes.reshape(pairs, 2, height, width)
    vectors = np.ascontiguousarray(planes.transpose(0, 2, 3, 1)).astype(np.float64)
    return FlowMapGrid(
        layout=layout,
        limb_count=limb_count,
        width=width,
        height=height,
        vectors=vectors,
        counts=None,
        grid_stride=1,
    )


def write_flowmap(grid: FlowMapGrid, path: str) -> None:
    with open(path, "wb") as fh:
        fh.write(flowmap_to_bytes(grid))


def read_flowmap(path: str) -> FlowMapGrid:
    with open(path, "rb") as fh:
        return flowmap_from_bytes(fh.read())
