"""Looping and duration control as deterministic supermotion edits."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .codec import SuperMotionSequence, decode
from .errors import Infeasible, InvalidArgument, LengthMismatch, SingleSegment
from .motion import MotionSequence, resample_to_length

SEAM_TOL = 1e-9


def loop_close(sm: SuperMotionSequence) -> SuperMotionSequence:
    """Overwrite the final supermotion with the first, duration and label included.

    The total frame count changes by ``d_0 - d_{M-1}``.
    """
    if sm.segment_count < 2:
        raise SingleSegment("loop closure needs at least two segments")
    x = sm.start_poses.copy()
    v = sm.velocities.copy()
    d = sm.durations.copy()
    lab = sm.labels.copy()
    for arr in (x, v, d, lab):
        arr[-1] = arr[0]
    return sm.replace(start_poses=x, velocities=v, durations=d, labels=lab)


@dataclass(frozen=True)
class SeamReport:
    wrap_step: float
    max_internal_step: float
    seamless: bool

    def to_dict(self) -> dict:
        return {"wrap_step": self.wrap_step, "max_internal_step": self.max_internal_step, "seamless": self.seamless}


def loop_seam_report(sm: SuperMotionSequence) -> SeamReport:
    """Compare the wrap-around step (last frame advanced by the last velocity
    versus frame 0) against the largest frame-to-frame step of the decoded
    motion."""
    frames = decode(sm).frames
    wrap = float(np.linalg.norm(frames[0] - (frames[-1] + sm.velocities[-1])))
    if frames.shape[0] >= 2:
        internal = float(np.max(np.linalg.norm(np.diff(frames, axis=0), axis=1)))
    else:
        internal = 0.0
    return SeamReport(wrap, internal, wrap <= internal + SEAM_TOL)


@dataclass(frozen=True, eq=False)
class DurationPlan:
    durations: np.ndarray
    d_min: int
    d_max: int

    @property
    def total(self) -> int:
        return int(self.durations.sum())

    @property
    def segment_count(self) -> int:
        return int(self.durations.size)


def decompose_duration(
    total: int, m: int, d_min: int = 1, d_max: int | None = None, mode: str = "even", seed: int = 0
) -> DurationPlan:
    """Split ``total`` frames into ``m`` durations inside ``[d_min, d_max]``.

    ``even`` gives the first ``total mod m`` entries one extra frame.
    ``seeded`` then applies ``m`` random unit transfers between entry pairs,
    skipping any transfer that would leave the bounds.
    """
    if d_max is None:
        d_max = max(total, d_min)
    if m < 1 or d_min < 1 or d_min > d_max:
        raise InvalidArgument("need m >= 1 and 1 <= d_min <= d_max", m=m, d_min=d_min, d_max=d_max)
    if m * d_min > total or m * d_max < total:
        raise Infeasible(
            f"{total} frames cannot be split into {m} durations within [{d_min}, {d_max}]",
            total=total, m=m, d_min=d_min, d_max=d_max,
        )
    base, extra = divmod(total, m)
    durations = np.full(m, base, dtype=np.int64)
    durations[:extra] += 1
    if mode == "seeded":
        if m > 1:
            rng = np.random.default_rng(seed)
            for _ in range(m):
                src, dst = rng.choice(m, size=2, replace=False)
                if durations[src] - 1 >= d_min and durations[dst] + 1 <= d_max:
                    durations[src] -= 1
                    durations[dst] += 1
    elif mode != "even":
        raise InvalidArgument("mode must be 'even' or 'seeded'", mode=mode)
    return DurationPlan(durations, int(d_min), int(d_max))


def retime_supermotions(sm: SuperMotionSequence, plan: DurationPlan) -> SuperMotionSequence:
    """Impose new durations, scaling velocities so each segment still ends where it did."""
    if plan.segment_count != sm.segment_count:
        raise LengthMismatch("plan and sequence differ in segment count",
                             plan=plan.segment_count, segments=sm.segment_count)
    new_d = np.asarray(plan.durations, dtype=np.int64)
    if np.any(new_d < 1):
        raise InvalidArgument("planned durations must be >= 1")
    if np.array_equal(new_d, sm.durations):
        return sm.replace()
    ratio = sm.durations.astype(np.float64) / new_d
    return sm.replace(velocities=sm.velocities * ratio[:, None], durations=new_d)


def match_music_length(motion: MotionSequence, target_frames: int) -> MotionSequence:
    return resample_to_length(motion, target_frames)
