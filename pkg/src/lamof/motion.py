"""Motion data model, 6D rotations, forward kinematics and resampling.

Frame layout
------------
``Representation.CARTESIAN``: ``D = 3 * J``, joint ``j`` occupies columns
``3j:3j+3`` (meters).

``Representation.ROT6D``: ``D = 6 * J + 3``.  Joint ``j``'s local rotation
occupies columns ``6j:6j+6`` as the first two matrix columns stacked
(``m00, m10, m20, m01, m11, m21``); the last three columns are the root
translation in meters.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    DegenerateRotation,
    DimensionMismatch,
    InvalidMotion,
    InvalidSkeleton,
    NotARotation,
    WrongRepresentation,
)

DEGENERACY_TOL = 1e-8
ORTHONORMAL_TOL = 1e-6


class Representation(enum.Enum):
    CARTESIAN = "cartesian3d"
    ROT6D = "rot6d"

    @property
    def code(self) -> int:
        return 0 if self is Representation.CARTESIAN else 1

    @classmethod
    def from_code(cls, code: int) -> "Representation":
        if code == 0:
            return cls.CARTESIAN
        if code == 1:
            return cls.ROT6D
        raise ValueError(f"unknown representation code {code}")

    @classmethod
    def parse(cls, value: "str | Representation") -> "Representation":
        if isinstance(value, Representation):
            return value
        key = value.strip().lower().replace("_", "").replace("-", "")
        aliases = {"cartesian3d": cls.CARTESIAN, "cartesian": cls.CARTESIAN, "rot6d": cls.ROT6D}
        if key not in aliases:
            raise InvalidMotion(f"unknown representation {value!r}")
        return aliases[key]


def feature_dim(representation: Representation, joint_count: int) -> int:
    if representation is Representation.CARTESIAN:
        return 3 * joint_count
    return 6 * joint_count + 3


def _frozen_array(values, ndim: int, what: str) -> np.ndarray:
    arr = np.array(values, dtype=np.float64)
    if arr.ndim != ndim:
        raise InvalidMotion(f"{what} must be {ndim}-dimensional, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise InvalidMotion(f"{what} contains non-finite values")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class MotionSequence:
    frames: np.ndarray
    representation: Representation
    joint_count: int
    fps: float = 30.0

    def __post_init__(self) -> None:
        rep = Representation.parse(self.representation)
        object.__setattr__(self, "representation", rep)
        if int(self.joint_count) != self.joint_count or self.joint_count < 1:
            raise InvalidMotion("joint_count must be a positive integer", joint_count=self.joint_count)
        object.__setattr__(self, "joint_count", int(self.joint_count))
        frames = _frozen_array(self.frames, 2, "frames")
        if frames.shape[0] < 1:
            raise InvalidMotion("a motion needs at least one frame")
        expected = feature_dim(rep, self.joint_count)
        if frames.shape[1] != expected:
            raise InvalidMotion(
                f"{rep.value} with {self.joint_count} joints needs {expected} features per frame",
                got=int(frames.shape[1]),
            )
        object.__setattr__(self, "frames", frames)
        fps = float(self.fps)
        if not np.isfinite(fps) or fps <= 0:
            raise InvalidMotion("fps must be positive", fps=fps)
        object.__setattr__(self, "fps", fps)

    @property
    def frame_count(self) -> int:
        return self.frames.shape[0]

    @property
    def feature_dim(self) -> int:
        return self.frames.shape[1]

    def with_frames(self, frames: np.ndarray) -> "MotionSequence":
        return MotionSequence(frames, self.representation, self.joint_count, self.fps)

    def joint_positions(self) -> np.ndarray:
        """(N, J, 3) view of a Cartesian motion."""
        if self.representation is not Representation.CARTESIAN:
            raise WrongRepresentation("joint_positions needs a Cartesian motion; use FK for rot6d")
        return self.frames.reshape(self.frame_count, self.joint_count, 3)

    def rotations(self) -> np.ndarray:
        """(N, J, 6) rotation features of a rot6d motion."""
        self._require_rot6d()
        return self.frames[:, : 6 * self.joint_count].reshape(self.frame_count, self.joint_count, 6)

    def root_translation(self) -> np.ndarray:
        self._require_rot6d()
        return self.frames[:, 6 * self.joint_count :]

    def _require_rot6d(self) -> None:
        if self.representation is not Representation.ROT6D:
            raise WrongRepresentation("operation needs a rot6d motion")

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, MotionSequence):
            return NotImplemented
        return (
            self.representation is other.representation
            and self.joint_count == other.joint_count
            and self.fps == other.fps
            and np.array_equal(self.frames, other.frames)
        )


@dataclass(frozen=True, eq=False)
class Skeleton:
    parents: tuple[int, ...]
    offsets: np.ndarray
    foot_joint_indices: tuple[int, ...] = field(default_factory=tuple)

    def __post_init__(self) -> None:
        parents = tuple(int(p) for p in self.parents)
        if not parents:
            raise InvalidSkeleton("skeleton has no joints")
        if parents[0] != -1 or sum(p == -1 for p in parents) != 1:
            raise InvalidSkeleton("joint 0 must be the single root (parent -1)", parents=list(parents))
        for j, p in enumerate(parents[1:], start=1):
            if not 0 <= p < j:
                raise InvalidSkeleton("parents must be topologically sorted", joint=j, parent=p)
        offsets = np.array(self.offsets, dtype=np.float64)
        if offsets.shape != (len(parents), 3):
            raise InvalidSkeleton(f"offsets must have shape ({len(parents)}, 3)", got=list(offsets.shape))
        if not np.all(np.isfinite(offsets)):
            raise InvalidSkeleton("offsets contain non-finite values")
        offsets.setflags(write=False)
        feet = tuple(int(f) for f in self.foot_joint_indices)
        for f in feet:
            if not 0 <= f < len(parents):
                raise InvalidSkeleton("foot joint index out of range", index=f)
        object.__setattr__(self, "parents", parents)
        object.__setattr__(self, "offsets", offsets)
        object.__setattr__(self, "foot_joint_indices", feet)

    @property
    def joint_count(self) -> int:
        return len(self.parents)

    def to_dict(self) -> dict:
        return {
            "parents": list(self.parents),
            "offsets": self.offsets.tolist(),
            "foot_joint_indices": list(self.foot_joint_indices),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "Skeleton":
        return cls(data["parents"], data["offsets"], data.get("foot_joint_indices", ()))

    @classmethod
    def chain(cls, offsets, foot_joint_indices=()) -> "Skeleton":
        """Serial chain where joint j hangs off joint j-1."""
        offsets = np.asarray(offsets, dtype=np.float64)
        return cls(tuple(range(-1, len(offsets) - 1)), offsets, foot_joint_indices)


@dataclass(frozen=True, eq=False)
class VelocityField:
    velocities: np.ndarray

    @property
    def frame_count(self) -> int:
        return self.velocities.shape[0]

    @property
    def feature_dim(self) -> int:
        return self.velocities.shape[1]


def compute_velocity_field(motion: MotionSequence) -> VelocityField:
    """Forward differences of the frames; the last row repeats the one before it."""
    frames = motion.frames
    vel = np.zeros_like(frames)
    if frames.shape[0] >= 2:
        vel[:-1] = frames[1:] - frames[:-1]
        vel[-1] = vel[-2]
    vel.setflags(write=False)
    return VelocityField(vel)


# -- rotations ---------------------------------------------------------------


def rot6d_to_matrices(r6: np.ndarray) -> np.ndarray:
    """Batched Gram-Schmidt: (..., 6) -> (..., 3, 3)."""
    r6 = np.asarray(r6, dtype=np.float64)
    if r6.shape[-1] != 6:
        raise DimensionMismatch("rotation features must have 6 entries", got=int(r6.shape[-1]))
    a1 = r6[..., :3]
    a2 = r6[..., 3:]
    n1 = np.linalg.norm(a1, axis=-1, keepdims=True)
    if np.any(n1 < DEGENERACY_TOL):
        raise DegenerateRotation("first rotation column has (near) zero norm")
    b1 = a1 / n1
    u2 = a2 - np.sum(b1 * a2, axis=-1, keepdims=True) * b1
    n2 = np.linalg.norm(u2, axis=-1, keepdims=True)
    if np.any(n2 < DEGENERACY_TOL):
        raise DegenerateRotation("rotation columns are parallel")
    b2 = u2 / n2
    b3 = np.cross(b1, b2)
    return np.stack([b1, b2, b3], axis=-1)


def rot6d_to_matrix(r) -> np.ndarray:
    r = np.asarray(r, dtype=np.float64)
    if r.shape != (6,):
        raise DimensionMismatch("expected a single 6-vector", got=list(r.shape))
    return rot6d_to_matrices(r)


def matrices_to_rot6d(m: np.ndarray, check: bool = True) -> np.ndarray:
    m = np.asarray(m, dtype=np.float64)
    if m.shape[-2:] != (3, 3):
        raise DimensionMismatch("expected 3x3 matrices", got=list(m.shape))
    if check:
        gram = np.swapaxes(m, -1, -2) @ m
        if not np.all(np.isfinite(m)) or np.max(np.abs(gram - np.eye(3)), initial=0.0) > ORTHONORMAL_TOL:
            raise NotARotation("matrix is not orthonormal")
        if np.any(np.linalg.det(m) <= 0):
            raise NotARotation("matrix is a reflection")
    return np.concatenate([m[..., :, 0], m[..., :, 1]], axis=-1)


def matrix_to_rot6d(m) -> np.ndarray:
    m = np.asarray(m, dtype=np.float64)
    if m.shape != (3, 3):
        raise DimensionMismatch("expected a 3x3 matrix", got=list(m.shape))
    return matrices_to_rot6d(m)


def project_rot6d(r6: np.ndarray) -> np.ndarray:
    """Snap arbitrary 6D features onto the nearest valid encoding (Gram-Schmidt)."""
    return matrices_to_rot6d(rot6d_to_matrices(r6), check=False)


def project_rotations(frames: np.ndarray, joint_count: int) -> np.ndarray:
    """Re-orthonormalize every joint rotation of rot6d frames (N, 6J+3)."""
    out = np.array(frames, dtype=np.float64)
    n = out.shape[0]
    rot = out[:, : 6 * joint_count].reshape(n, joint_count, 6)
    out[:, : 6 * joint_count] = project_rot6d(rot).reshape(n, 6 * joint_count)
    return out


# -- forward kinematics --------------------------------------------------------


def forward_kinematics_batch(skeleton: Skeleton, frames: np.ndarray) -> np.ndarray:
    """Joint positions (N, J, 3) for rot6d frames (N, 6J+3).

    Rotations are local to the parent; the root offset is ignored and the
    root sits at the frame's translation.
    """
    frames = np.asarray(frames, dtype=np.float64)
    J = skeleton.joint_count
    if frames.ndim != 2 or frames.shape[1] != 6 * J + 3:
        raise DimensionMismatch(
            f"pose dimension must be 6*J+3 = {6 * J + 3}", got=list(frames.shape)
        )
    n = frames.shape[0]
    local = rot6d_to_matrices(frames[:, : 6 * J].reshape(n, J, 6))
    glob = np.empty_like(local)
    pos = np.empty((n, J, 3))
    glob[:, 0] = local[:, 0]
    pos[:, 0] = frames[:, 6 * J :]
    for j in range(1, J):
        p = skeleton.parents[j]
        glob[:, j] = glob[:, p] @ local[:, j]
        pos[:, j] = pos[:, p] + glob[:, p] @ skeleton.offsets[j]
    return pos


def forward_kinematics(skeleton: Skeleton, pose) -> np.ndarray:
    pose = np.asarray(pose, dtype=np.float64)
    if pose.ndim != 1:
        raise DimensionMismatch("pose must be a single frame vector", got=list(pose.shape))
    return forward_kinematics_batch(skeleton, pose[None, :])[0]


def to_joint_positions(motion: MotionSequence, skeleton: Skeleton | None = None) -> np.ndarray:
    """(N, J, 3) positions of any motion; rot6d needs a skeleton."""
    if motion.representation is Representation.CARTESIAN:
        return motion.joint_positions()
    if skeleton is None:
        raise WrongRepresentation("a skeleton is required to convert rot6d motion to positions")
    if skeleton.joint_count != motion.joint_count:
        raise DimensionMismatch(
            "skeleton and motion joint counts differ",
            skeleton=skeleton.joint_count,
            motion=motion.joint_count,
        )
    return forward_kinematics_batch(skeleton, motion.frames)


# -- resampling ---------------------------------------------------------------


def resample_to_length(motion: MotionSequence, target_len: int) -> MotionSequence:
    """Clip (uniform subsample) or linearly interpolate to exactly ``target_len`` frames.

    Downsampling keeps frame ``round(i (N-1) / (T-1))`` with halves rounded
    up.  Upsampling interpolates at ``i (N-1) / (T-1)``.  Frames landing on an
    integer position are copied verbatim, so both endpoints survive exactly.
    A single-frame target keeps frame 0.
    """
    if int(target_len) != target_len or target_len < 1:
        raise InvalidMotion("target length must be a positive integer", target_len=target_len)
    target_len = int(target_len)
    n = motion.frame_count
    if target_len == n:
        return motion.with_frames(motion.frames.copy())
    frames = motion.frames
    if target_len == 1:
        return motion.with_frames(frames[:1].copy())
    span = target_len - 1
    i = np.arange(target_len, dtype=np.int64)
    scaled = i * (n - 1)
    if target_len < n:
        idx = (2 * scaled + span) // (2 * span)
        return motion.with_frames(frames[idx])
    lo = scaled // span
    rem = scaled % span
    hi = np.minimum(lo + 1, n - 1)
    w = (rem / span)[:, None]
    out = (1.0 - w) * frames[lo] + w * frames[hi]
    exact = rem == 0
    out[exact] = frames[lo[exact]]
    if motion.representation is Representation.ROT6D:
        blended = ~exact
        if np.any(blended):
            out[blended] = project_rotations(out[blended], motion.joint_count)
    return motion.with_frames(out)
