"""Supermotion codec: velocity clustering, segmentation, encode and decode.

A supermotion ``(start_pose, velocity, duration)`` stands for a run of
frames with near-uniform velocity.  Decoding is a linear ramp per segment.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import (
    DimensionMismatch,
    EvenWindow,
    FrameCountMismatch,
    InvalidArgument,
    InvalidMotion,
    SingleSegment,
)
from .kmeans import ClusterModel, KMeansConfig, fit_kmeans, nearest_centroids
from .motion import (
    MotionSequence,
    Representation,
    VelocityField,
    compute_velocity_field,
    feature_dim,
    project_rotations,
)

DEFAULT_K = 1000
ABLATION_K = 2000


class VelocityMode(enum.Enum):
    SECANT = "secant"
    MEAN_FIELD = "meanfield"

    @classmethod
    def parse(cls, value: "str | VelocityMode") -> "VelocityMode":
        if isinstance(value, VelocityMode):
            return value
        key = value.strip().lower().replace("_", "").replace("-", "")
        for mode in cls:
            if mode.value == key:
                return mode
        raise InvalidArgument(f"unknown velocity mode {value!r}")


@dataclass(frozen=True)
class EncodeConfig:
    smooth_window: int = 5
    min_duration: int = 1
    velocity_mode: VelocityMode = VelocityMode.SECANT


@dataclass(frozen=True, eq=False)
class SuperMotion:
    start_pose: np.ndarray
    velocity: np.ndarray
    duration: int
    cluster_label: int = 0


@dataclass(frozen=True, eq=False)
class SuperMotionSequence:
    """M supermotions stored column-wise.

    ``start_poses`` and ``velocities`` are (M, D); ``durations`` and
    ``labels`` are length-M integer arrays.
    """

    start_poses: np.ndarray
    velocities: np.ndarray
    durations: np.ndarray
    labels: np.ndarray
    representation: Representation
    joint_count: int
    fps: float = 30.0
    condition_tag: bytes | None = None

    def __post_init__(self) -> None:
        rep = Representation.parse(self.representation)
        object.__setattr__(self, "representation", rep)
        x = np.array(self.start_poses, dtype=np.float64)
        v = np.array(self.velocities, dtype=np.float64)
        d = np.array(self.durations, dtype=np.int64).reshape(-1)
        lab = np.array(self.labels, dtype=np.int64).reshape(-1)
        if x.ndim != 2 or x.shape[0] < 1:
            raise InvalidMotion("a supermotion sequence needs at least one segment")
        m, dim = x.shape
        if v.shape != (m, dim) or d.shape != (m,) or lab.shape != (m,):
            raise DimensionMismatch("segment arrays disagree in shape")
        if dim != feature_dim(rep, int(self.joint_count)):
            raise DimensionMismatch("feature dimension does not match representation", got=dim)
        if np.any(d < 1):
            raise InvalidMotion("every duration must be >= 1")
        if not (np.all(np.isfinite(x)) and np.all(np.isfinite(v))):
            raise InvalidMotion("supermotion contains non-finite values")
        if float(self.fps) <= 0:
            raise InvalidMotion("fps must be positive")
        for arr in (x, v, d, lab):
            arr.setflags(write=False)
        object.__setattr__(self, "start_poses", x)
        object.__setattr__(self, "velocities", v)
        object.__setattr__(self, "durations", d)
        object.__setattr__(self, "labels", lab)
        object.__setattr__(self, "joint_count", int(self.joint_count))
        object.__setattr__(self, "fps", float(self.fps))
        if self.condition_tag is not None:
            object.__setattr__(self, "condition_tag", bytes(self.condition_tag))

    @classmethod
    def from_segments(
        cls,
        segments: Iterable[SuperMotion],
        representation: Representation,
        joint_count: int,
        fps: float = 30.0,
        condition_tag: bytes | None = None,
    ) -> "SuperMotionSequence":
        segs = list(segments)
        if not segs:
            raise InvalidMotion("a supermotion sequence needs at least one segment")
        return cls(
            np.stack([s.start_pose for s in segs]),
            np.stack([s.velocity for s in segs]),
            np.array([s.duration for s in segs]),
            np.array([s.cluster_label for s in segs]),
            representation,
            joint_count,
            fps,
            condition_tag,
        )

    @property
    def segment_count(self) -> int:
        return self.durations.shape[0]

    @property
    def feature_dim(self) -> int:
        return self.start_poses.shape[1]

    @property
    def total_frames(self) -> int:
        return int(self.durations.sum())

    @property
    def start_times(self) -> np.ndarray:
        return np.concatenate([[0], np.cumsum(self.durations)[:-1]])

    @property
    def segments(self) -> list[SuperMotion]:
        return [
            SuperMotion(self.start_poses[s], self.velocities[s], int(self.durations[s]), int(self.labels[s]))
            for s in range(self.segment_count)
        ]

    def replace(self, **changes) -> "SuperMotionSequence":
        fields = dict(
            start_poses=self.start_poses,
            velocities=self.velocities,
            durations=self.durations,
            labels=self.labels,
            representation=self.representation,
            joint_count=self.joint_count,
            fps=self.fps,
            condition_tag=self.condition_tag,
        )
        fields.update(changes)
        return SuperMotionSequence(**fields)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, SuperMotionSequence):
            return NotImplemented
        return (
            self.representation is other.representation
            and self.joint_count == other.joint_count
            and self.fps == other.fps
            and self.condition_tag == other.condition_tag
            and np.array_equal(self.start_poses, other.start_poses)
            and np.array_equal(self.velocities, other.velocities)
            and np.array_equal(self.durations, other.durations)
            and np.array_equal(self.labels, other.labels)
        )


# -- clustering ----------------------------------------------------------------


def fit_clusters(
    fields: Sequence[VelocityField], k: int = DEFAULT_K, config: KMeansConfig = KMeansConfig()
) -> ClusterModel:
    if not fields:
        raise InvalidArgument("no velocity fields given")
    dims = {f.feature_dim for f in fields}
    if len(dims) != 1:
        raise DimensionMismatch("velocity fields disagree in feature dimension", dims=sorted(dims))
    x = np.concatenate([f.velocities for f in fields], axis=0)
    return fit_kmeans(x, k, config)


def assign_labels(field: VelocityField, model: ClusterModel) -> np.ndarray:
    if field.feature_dim != model.feature_dim:
        raise DimensionMismatch(
            "velocity field and cluster model dimensions differ",
            field=field.feature_dim,
            model=model.feature_dim,
        )
    labels, _ = nearest_centroids(field.velocities, model.centroids)
    return labels


def smooth_labels(labels: Sequence[int], window: int = 5) -> np.ndarray:
    """Sliding-window majority vote, edges clamped to the end labels.

    A tie keeps the previous output label if it is among the leaders,
    otherwise takes the lowest leading label.
    """
    if int(window) != window or window < 1 or window % 2 == 0:
        raise EvenWindow("smoothing window must be a positive odd integer", window=window)
    lab = np.asarray(labels, dtype=np.int64).reshape(-1)
    n = lab.size
    if window == 1 or n == 0:
        return lab.copy()
    half = window // 2
    idx = np.clip(np.arange(n)[:, None] + np.arange(-half, half + 1)[None, :], 0, n - 1)
    win = lab[idx]
    votes = (win[:, :, None] == win[:, None, :]).sum(axis=2)
    top = votes.max(axis=1)
    leaders = np.where(votes == top[:, None], win, np.iinfo(np.int64).max)
    lowest = leaders.min(axis=1)
    highest = np.where(votes == top[:, None], win, np.iinfo(np.int64).min).max(axis=1)
    out = lowest.copy()
    tied = np.flatnonzero(lowest[1:] != highest[1:]) + 1
    if tied.size:
        is_leader = votes[tied] == top[tied, None]
        leader_sets = [set(w[m].tolist()) for w, m in zip(win[tied], is_leader)]
        result = out.tolist()
        for t, leaders_t in zip(tied.tolist(), leader_sets):
            if result[t - 1] in leaders_t:
                result[t] = result[t - 1]
        out = np.asarray(result, dtype=np.int64)
    return out


def _runs(labels: np.ndarray) -> list[list[int]]:
    cuts = np.flatnonzero(np.diff(labels) != 0) + 1
    starts = np.concatenate([[0], cuts])
    ends = np.concatenate([cuts, [labels.size]])
    return [[int(labels[s]), int(s), int(e - s)] for s, e in zip(starts, ends)]


def group_segments(
    labels: Sequence[int], min_duration: int = 1, centroids: np.ndarray | None = None
) -> list[tuple[int, int, int]]:
    """Run-length encode labels into ``(label, start, duration)`` triples.

    With ``min_duration > 1`` the leftmost shortest run under the limit is
    repeatedly absorbed by whichever neighbour has the closer centroid
    (left on ties, left when no centroids are given) until none remain.
    """
    lab = np.asarray(labels, dtype=np.int64).reshape(-1)
    if lab.size == 0:
        raise InvalidArgument("labels must be non-empty")
    if int(min_duration) != min_duration or min_duration < 1:
        raise InvalidArgument("min_duration must be a positive integer", min_duration=min_duration)
    runs = _runs(lab)
    while len(runs) > 1:
        short = [i for i, r in enumerate(runs) if r[2] < min_duration]
        if not short:
            break
        i = min(short, key=lambda j: (runs[j][2], j))
        if i == 0:
            target = 1
        elif i == len(runs) - 1:
            target = i - 1
        elif centroids is None:
            target = i - 1
        else:
            c = centroids[runs[i][0]]
            d_left = float(np.sum((centroids[runs[i - 1][0]] - c) ** 2))
            d_right = float(np.sum((centroids[runs[i + 1][0]] - c) ** 2))
            target = i - 1 if d_left <= d_right else i + 1
        runs[target][2] += runs[i][2]
        if target > i:
            runs[target][1] = runs[i][1]
        del runs[i]
        merged: list[list[int]] = []
        for r in runs:
            if merged and merged[-1][0] == r[0]:
                merged[-1][2] += r[2]
            else:
                merged.append(r)
        runs = merged
    return [(r[0], r[1], r[2]) for r in runs]


# -- encode / decode -------------------------------------------------------------


def encode(
    motion: MotionSequence,
    model: ClusterModel,
    config: EncodeConfig = EncodeConfig(),
    condition_tag: bytes | None = None,
) -> SuperMotionSequence:
    frames = motion.frames
    if model.feature_dim != motion.feature_dim:
        raise DimensionMismatch(
            "motion and cluster model dimensions differ", motion=motion.feature_dim, model=model.feature_dim
        )
    field = compute_velocity_field(motion)
    labels = smooth_labels(assign_labels(field, model), config.smooth_window)
    groups = group_segments(labels, config.min_duration, model.centroids)
    seg_labels = np.array([g[0] for g in groups], dtype=np.int64)
    starts = np.array([g[1] for g in groups], dtype=np.int64)
    durations = np.array([g[2] for g in groups], dtype=np.int64)
    x = frames[starts]
    mode = VelocityMode.parse(config.velocity_mode)
    if mode is VelocityMode.SECANT:
        v = np.zeros_like(x)
        if starts.size > 1:
            v[:-1] = (frames[starts[1:]] - x[:-1]) / durations[:-1, None]
        if durations[-1] > 1:
            v[-1] = (frames[-1] - x[-1]) / (durations[-1] - 1)
    else:
        sums = np.add.reduceat(field.velocities, starts, axis=0)
        v = sums / durations[:, None]
    return SuperMotionSequence(
        x, v, durations, seg_labels, motion.representation, motion.joint_count, motion.fps, condition_tag
    )


def decode(sm: SuperMotionSequence, reorthonormalize: bool = False) -> MotionSequence:
    """Expand each segment to ``start_pose + o * velocity`` for ``o < duration``."""
    d = sm.durations
    seg = np.repeat(np.arange(sm.segment_count), d)
    offset = np.arange(sm.total_frames) - np.repeat(sm.start_times, d)
    frames = sm.start_poses[seg] + offset[:, None] * sm.velocities[seg]
    if reorthonormalize and sm.representation is Representation.ROT6D:
        frames = project_rotations(frames, sm.joint_count)
    return MotionSequence(frames, sm.representation, sm.joint_count, sm.fps)


def coherence_residual(sm: SuperMotionSequence) -> np.ndarray:
    """``|x_{s+1} - (x_s + v_s d_s)|`` for each adjacent pair of segments."""
    if sm.segment_count < 2:
        raise SingleSegment("coherence needs at least two segments")
    reach = sm.start_poses[:-1] + sm.velocities[:-1] * sm.durations[:-1, None]
    return np.linalg.norm(sm.start_poses[1:] - reach, axis=1)


@dataclass(frozen=True)
class CompressionReport:
    ratio: float
    M: int
    N: int
    mean_duration: float

    def to_dict(self) -> dict:
        return {"ratio": self.ratio, "M": self.M, "N": self.N, "mean_duration": self.mean_duration}


def compression_report(original: MotionSequence, sm: SuperMotionSequence) -> CompressionReport:
    n = original.frame_count
    if sm.total_frames != n:
        raise FrameCountMismatch("supermotions do not cover the original frames", N=n, total=sm.total_frames)
    m = sm.segment_count
    return CompressionReport(ratio=n / m, M=m, N=n, mean_duration=n / m)
