"""Long-sequence construction by crossfade stitching of short rot6d clips."""
from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import BadClipLength, EmptyPrompt, InvalidArgument, RepresentationMismatch, TooShortForTransition
from .motion import MotionSequence, Representation, project_rot6d

DEFAULT_TRANSITION = 20
DEFAULT_CLIP_COUNT = 10
CLIP_LEN_MIN = 40
CLIP_LEN_MAX = 200

FIRST_SUBJECT = "The person"
NEXT_SUBJECT = "And then this person"
_SUBJECT = re.compile(r"^\s*(a person|the person|a man|a woman|someone|he|she)\b\s*", re.IGNORECASE)


@dataclass(frozen=True)
class Clip:
    motion: MotionSequence
    prompt: str
    clip_id: str = ""


@dataclass(frozen=True)
class StitchConfig:
    transition_frames: int = DEFAULT_TRANSITION
    clip_count: int = DEFAULT_CLIP_COUNT
    seed: int = 0
    len_min: int = CLIP_LEN_MIN
    len_max: int = CLIP_LEN_MAX

    def __post_init__(self) -> None:
        if self.transition_frames < 1:
            raise InvalidArgument("transition_frames must be >= 1")
        if self.clip_count < 2:
            raise InvalidArgument("clip_count must be >= 2")
        if self.transition_frames >= self.len_min:
            raise InvalidArgument("transition must be shorter than the minimum clip length")


def fade_weights(m: int) -> tuple[np.ndarray, np.ndarray]:
    """Fade-out and fade-in weights ``(m - j)/m`` and ``j/m`` for ``j < m``."""
    j = np.arange(m, dtype=np.float64)
    return (m - j) / m, j / m


def stitch(a: MotionSequence, b: MotionSequence, m: int = DEFAULT_TRANSITION) -> MotionSequence:
    """Join two rot6d clips over an ``m``-frame crossfade.

    The output has ``L1 + L2 - m`` frames: ``a[:L1-m]``, then ``m`` blended
    frames pairing ``a[L1-m+j]`` with ``b[j]``, then ``b[m:]``.  Blended
    rotations are projected back onto valid 6D encodings.  Root translation
    restarts from ``a``'s first frame and accumulates per-frame deltas taken
    from the same timeline, with the ``m - 1`` deltas inside the overlap
    crossfaded by the same weights.
    """
    for clip in (a, b):
        if clip.representation is not Representation.ROT6D:
            raise RepresentationMismatch("stitching needs rot6d clips with root translation")
    if a.joint_count != b.joint_count:
        raise RepresentationMismatch("clips have different joint counts", a=a.joint_count, b=b.joint_count)
    l1, l2 = a.frame_count, b.frame_count
    if int(m) != m or m < 1:
        raise InvalidArgument("transition length must be a positive integer", m=m)
    if min(l1, l2) <= m:
        raise TooShortForTransition(f"clips must be longer than the {m}-frame transition", L1=l1, L2=l2)
    J = a.joint_count
    f_out, f_in = fade_weights(m)

    ra, rb = a.frames[:, : 6 * J], b.frames[:, : 6 * J]
    blend = f_out[:, None] * ra[l1 - m :] + f_in[:, None] * rb[:m]
    blend = project_rot6d(blend.reshape(m, J, 6)).reshape(m, 6 * J)
    rot = np.concatenate([ra[: l1 - m], blend, rb[m:]], axis=0)

    da = np.diff(a.frames[:, 6 * J :], axis=0)
    db = np.diff(b.frames[:, 6 * J :], axis=0)
    overlap = f_out[: m - 1, None] * da[l1 - m : l1 - 1] + f_in[: m - 1, None] * db[: m - 1]
    deltas = np.concatenate([da[: l1 - m], overlap, db[m - 1 :]], axis=0)
    trans = np.empty((l1 + l2 - m, 3))
    trans[0] = a.frames[0, 6 * J :]
    trans[1:] = trans[0] + np.cumsum(deltas, axis=0)

    return MotionSequence(np.concatenate([rot, trans], axis=1), Representation.ROT6D, J, a.fps)


def rewrite_subject(prompt: str, position: str = "first") -> str:
    """Swap a leading subject phrase for the narrator subject of ``position``.

    ``position`` is ``"first"`` or ``"subsequent"``.  Prompts that do not
    open with a known subject are prefixed instead.
    """
    if not prompt or not prompt.strip():
        raise EmptyPrompt("prompt is empty")
    if position == "first":
        subject = FIRST_SUBJECT
    elif position == "subsequent":
        subject = NEXT_SUBJECT
    else:
        raise InvalidArgument("position must be 'first' or 'subsequent'", position=position)
    match = _SUBJECT.match(prompt)
    rest = prompt[match.end():] if match else prompt.strip()
    return f"{subject} {rest}".rstrip()


def compose_prompt(prompts: Sequence[str]) -> str:
    parts = [rewrite_subject(p, "first" if i == 0 else "subsequent").rstrip(". ")
             for i, p in enumerate(prompts)]
    return ". ".join(parts)


def build_long_sequence(clips: Sequence[Clip], config: StitchConfig = StitchConfig()) -> tuple[MotionSequence, str]:
    if len(clips) != config.clip_count:
        raise InvalidArgument(f"expected {config.clip_count} clips, got {len(clips)}")
    for i, clip in enumerate(clips):
        n = clip.motion.frame_count
        if not config.len_min <= n <= config.len_max:
            raise BadClipLength(
                f"clip length {n} outside [{config.len_min}, {config.len_max}]", index=i, clip_id=clip.clip_id
            )
    out = clips[0].motion
    for clip in clips[1:]:
        out = stitch(out, clip.motion, config.transition_frames)
    return out, compose_prompt([c.prompt for c in clips])
