"""LMF1 / LSM1 / LCM1 binary formats and JSON sidecars.

All binary files are little-endian: a 4-byte magic, a fixed header, a
float32 payload and a trailing CRC-32 computed over header and payload.
Values are float64 in memory, so a save/load cycle rounds to float32 once
and is bit-exact from then on.
"""
from __future__ import annotations

import json
import os
import struct
import tempfile
import zlib
from pathlib import Path

import numpy as np

from .codec import SuperMotionSequence
from .errors import (
    BadMagic,
    ChecksumMismatch,
    LamofError,
    MalformedFile,
    TruncatedFile,
    VersionUnsupported,
)
from .kmeans import ClusterModel
from .motion import MotionSequence, Representation, Skeleton

FORMAT_VERSION = 1

MOTION_MAGIC = b"LMF1"
SUPERMOTION_MAGIC = b"LSM1"
MODEL_MAGIC = b"LCM1"

_MOTION_HEADER = struct.Struct("<IfBIII")  # version, fps, representation, J, N, D
_SM_HEADER = struct.Struct("<IfBIIII")  # version, fps, representation, J, D, M, total frames
_MODEL_HEADER = struct.Struct("<IIIQIf")  # version, K, D, seed, iterations, inertia
_CRC = struct.Struct("<I")
_U32_MAX = 2**32 - 1


def atomic_write(path: str | os.PathLike, data: bytes) -> None:
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent or ".", prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _f32(values: np.ndarray) -> bytes:
    return np.ascontiguousarray(values, dtype="<f4").tobytes()


def _seal(magic: bytes, body: bytes) -> bytes:
    return magic + body + _CRC.pack(zlib.crc32(body))


def _open(data: bytes, magic: bytes, header: struct.Struct, what: str) -> tuple:
    if len(data) < len(magic):
        raise TruncatedFile(f"{what} file is shorter than its magic", size=len(data))
    if data[: len(magic)] != magic:
        raise BadMagic(f"not a {what} file", expected=magic.decode(), got=data[: len(magic)].hex())
    end = len(magic) + header.size
    if len(data) < end:
        raise TruncatedFile(f"{what} header is incomplete", size=len(data))
    fields = header.unpack_from(data, len(magic))
    if fields[0] != FORMAT_VERSION:
        raise VersionUnsupported(f"unsupported {what} version {fields[0]}", version=fields[0])
    return fields


def _verify(data: bytes, magic: bytes, expected_len: int, what: str) -> bytes:
    total = expected_len + _CRC.size
    if len(data) < total:
        raise TruncatedFile(f"{what} file is truncated", size=len(data), expected=total)
    if len(data) > total:
        raise MalformedFile(f"{what} file has trailing bytes", size=len(data), expected=total)
    body = data[len(magic) : expected_len]
    (stored,) = _CRC.unpack_from(data, expected_len)
    if stored != zlib.crc32(body):
        raise ChecksumMismatch(f"{what} checksum mismatch")
    return body


def _rep_code(code: int) -> Representation:
    try:
        return Representation.from_code(code)
    except ValueError as exc:
        raise MalformedFile(str(exc)) from None


# -- motion ---------------------------------------------------------------------------


def motion_to_bytes(motion: MotionSequence) -> bytes:
    n, d = motion.frames.shape
    header = _MOTION_HEADER.pack(FORMAT_VERSION, motion.fps, motion.representation.code, motion.joint_count, n, d)
    return _seal(MOTION_MAGIC, header + _f32(motion.frames))


def motion_from_bytes(data: bytes) -> MotionSequence:
    _, fps, rep, j, n, d = _open(data, MOTION_MAGIC, _MOTION_HEADER, "motion")
    start = len(MOTION_MAGIC) + _MOTION_HEADER.size
    _verify(data, MOTION_MAGIC, start + 4 * n * d, "motion")
    frames = np.frombuffer(data, dtype="<f4", count=n * d, offset=start).astype(np.float64).reshape(n, d)
    try:
        return MotionSequence(frames, _rep_code(rep), j, fps)
    except LamofError as exc:
        raise MalformedFile(f"motion file holds an invalid motion: {exc.message}") from None


# -- supermotions ---------------------------------------------------------------------


def _segment_dtype(d: int) -> np.dtype:
    return np.dtype([("duration", "<u4"), ("label", "<u4"), ("x", "<f4", (d,)), ("v", "<f4", (d,))])


def supermotion_to_bytes(sm: SuperMotionSequence) -> bytes:
    m, d = sm.start_poses.shape
    if np.any(sm.labels < 0) or np.any(sm.labels > _U32_MAX) or sm.total_frames > _U32_MAX:
        raise MalformedFile("labels and frame counts must fit in u32")
    header = _SM_HEADER.pack(
        FORMAT_VERSION, sm.fps, sm.representation.code, sm.joint_count, d, m, sm.total_frames
    )
    rec = np.zeros(m, dtype=_segment_dtype(d))
    rec["duration"] = sm.durations
    rec["label"] = sm.labels
    rec["x"] = sm.start_poses
    rec["v"] = sm.velocities
    tag = sm.condition_tag
    tail = struct.pack("<BI", 0, 0) if tag is None else struct.pack("<BI", 1, len(tag)) + tag
    return _seal(SUPERMOTION_MAGIC, header + rec.tobytes() + tail)


def supermotion_from_bytes(data: bytes) -> SuperMotionSequence:
    _, fps, rep, j, d, m, total = _open(data, SUPERMOTION_MAGIC, _SM_HEADER, "supermotion")
    if m < 1:
        raise MalformedFile("supermotion file declares no segments")
    dtype = _segment_dtype(d)
    start = len(SUPERMOTION_MAGIC) + _SM_HEADER.size
    tag_at = start + m * dtype.itemsize
    if len(data) < tag_at + 5 + _CRC.size:
        raise TruncatedFile("supermotion file is truncated", size=len(data))
    has_tag, tag_len = struct.unpack_from("<BI", data, tag_at)
    if has_tag not in (0, 1) or (has_tag == 0 and tag_len != 0):
        raise MalformedFile("bad condition tag marker")
    _verify(data, SUPERMOTION_MAGIC, tag_at + 5 + tag_len, "supermotion")
    tag = bytes(data[tag_at + 5 : tag_at + 5 + tag_len]) if has_tag else None
    rec = np.frombuffer(data, dtype=dtype, count=m, offset=start)
    if int(rec["duration"].astype(np.int64).sum()) != total:
        raise MalformedFile("recorded total frames do not match the durations", total=total)
    try:
        return SuperMotionSequence(
            rec["x"].astype(np.float64),
            rec["v"].astype(np.float64),
            rec["duration"].astype(np.int64),
            rec["label"].astype(np.int64),
            _rep_code(rep),
            j,
            fps,
            tag,
        )
    except LamofError as exc:
        raise MalformedFile(f"supermotion file holds invalid data: {exc.message}") from None


# -- cluster model -----------------------------------------------------------------------


def model_to_bytes(model: ClusterModel) -> bytes:
    k, d = model.centroids.shape
    header = _MODEL_HEADER.pack(FORMAT_VERSION, k, d, model.seed, model.iterations_run, model.inertia)
    return _seal(MODEL_MAGIC, header + _f32(model.centroids))


def model_from_bytes(data: bytes) -> ClusterModel:
    _, k, d, seed, iters, inertia = _open(data, MODEL_MAGIC, _MODEL_HEADER, "cluster model")
    start = len(MODEL_MAGIC) + _MODEL_HEADER.size
    _verify(data, MODEL_MAGIC, start + 4 * k * d, "cluster model")
    centroids = np.frombuffer(data, dtype="<f4", count=k * d, offset=start).astype(np.float64).reshape(k, d)
    try:
        return ClusterModel(centroids, seed=seed, inertia=float(inertia), iterations_run=iters)
    except LamofError as exc:
        raise MalformedFile(f"cluster model file holds invalid data: {exc.message}") from None


# -- JSON ---------------------------------------------------------------------------------


def motion_to_json(motion: MotionSequence) -> str:
    return json.dumps(
        {
            "format_version": FORMAT_VERSION,
            "fps": motion.fps,
            "representation": motion.representation.value,
            "joint_count": motion.joint_count,
            "frames": motion.frames.tolist(),
        }
    )


def motion_from_json(text: str) -> MotionSequence:
    try:
        data = json.loads(text)
        version = data["format_version"]
        if version != FORMAT_VERSION:
            raise VersionUnsupported(f"unsupported motion JSON version {version}", version=version)
        return MotionSequence(
            np.array(data["frames"], dtype=np.float64),
            Representation.parse(data["representation"]),
            data["joint_count"],
            data["fps"],
        )
    except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
        raise MalformedFile(f"invalid motion JSON: {exc}") from None


# -- path helpers ---------------------------------------------------------------------------


def _read(path) -> bytes:
    return Path(path).read_bytes()


def save_motion(path, motion: MotionSequence) -> None:
    if str(path).lower().endswith(".json"):
        atomic_write(path, motion_to_json(motion).encode())
    else:
        atomic_write(path, motion_to_bytes(motion))


def load_motion(path) -> MotionSequence:
    if str(path).lower().endswith(".json"):
        return motion_from_json(Path(path).read_text())
    return motion_from_bytes(_read(path))


def save_supermotion(path, sm: SuperMotionSequence) -> None:
    atomic_write(path, supermotion_to_bytes(sm))


def load_supermotion(path) -> SuperMotionSequence:
    return supermotion_from_bytes(_read(path))


def save_model(path, model: ClusterModel) -> None:
    atomic_write(path, model_to_bytes(model))


def load_model(path) -> ClusterModel:
    return model_from_bytes(_read(path))


def save_skeleton(path, skeleton: Skeleton) -> None:
    atomic_write(path, json.dumps(skeleton.to_dict()).encode())


def load_skeleton(path) -> Skeleton:
    try:
        return Skeleton.from_dict(json.loads(Path(path).read_text()))
    except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
        raise MalformedFile(f"invalid skeleton JSON: {exc}") from None
