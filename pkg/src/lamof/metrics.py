"""Pairwise metrics between supermotion sequences and foot-contact measures."""
from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from .codec import SuperMotionSequence, coherence_residual, decode
from .errors import InvalidArgument, NoFootJoints, ShapeMismatch, WrongRepresentation
from .motion import MotionSequence, Representation, Skeleton, forward_kinematics_batch, to_joint_positions

# Loss weights the supermotion generator used on the dance benchmark (EDGE backbone).
DANCE_WEIGHTS = {"w_joint": 0.646, "w_vel": 0.0, "w_contact": 10.942, "w_coherent": 2.964}


@dataclass(frozen=True)
class ContactThresholds:
    max_height: float = 0.05
    max_speed: float = 0.01
    skate_speed: float = 0.025
    up_axis: int = 1


@dataclass(frozen=True, eq=False)
class ContactLabels:
    labels: np.ndarray
    thresholds: ContactThresholds


@dataclass(frozen=True)
class MetricWeights:
    w_recon: float = 1.0
    w_joint: float = 0.0
    w_vel: float = 0.0
    w_contact: float = 0.0
    w_coherent: float = 0.0

    def __post_init__(self) -> None:
        for name, value in asdict(self).items():
            if not np.isfinite(value) or value < 0:
                raise InvalidArgument(f"weight {name} must be finite and non-negative", value=value)

    @classmethod
    def from_dict(cls, data: dict) -> "MetricWeights":
        unknown = set(data) - set(cls.__dataclass_fields__)
        if unknown:
            raise InvalidArgument("unknown weight names", names=sorted(unknown))
        return cls(**{k: float(v) for k, v in data.items()})


@dataclass(frozen=True)
class MetricComponents:
    recon: float = 0.0
    joint: float = 0.0
    vel: float = 0.0
    contact: float = 0.0
    coherent: float = 0.0


def _check_pair(a: SuperMotionSequence, b: SuperMotionSequence) -> None:
    if a.segment_count != b.segment_count or a.feature_dim != b.feature_dim:
        raise ShapeMismatch(
            "supermotion sequences differ in shape",
            a=[a.segment_count, a.feature_dim],
            b=[b.segment_count, b.feature_dim],
        )


def _flat(sm: SuperMotionSequence, duration_scale: float) -> np.ndarray:
    d = sm.durations.astype(np.float64)[:, None] * duration_scale
    return np.concatenate([sm.start_poses, sm.velocities, d], axis=1)


def recon_metric(a: SuperMotionSequence, b: SuperMotionSequence, duration_scale: float = 1.0) -> float:
    """Mean over segments of ``|[x, v, d]_a - [x, v, d]_b|^2``."""
    _check_pair(a, b)
    diff = _flat(a, duration_scale) - _flat(b, duration_scale)
    return float(np.mean(np.sum(diff * diff, axis=1)))


def velocity_metric(a: SuperMotionSequence, b: SuperMotionSequence) -> float:
    _check_pair(a, b)
    diff = a.velocities - b.velocities
    return float(np.mean(np.sum(diff * diff, axis=1)))


def joint_metric(a: SuperMotionSequence, b: SuperMotionSequence, skeleton: Skeleton) -> float:
    """Mean squared FK distance between the segment start poses of two rot6d sequences."""
    for sm in (a, b):
        if sm.representation is not Representation.ROT6D:
            raise WrongRepresentation("joint_metric needs rot6d supermotions; use recon_metric for Cartesian")
    _check_pair(a, b)
    pa = forward_kinematics_batch(skeleton, a.start_poses)
    pb = forward_kinematics_batch(skeleton, b.start_poses)
    return float(np.mean(np.sum((pa - pb) ** 2, axis=(1, 2))))


def coherent_metric(sm: SuperMotionSequence) -> float:
    r = coherence_residual(sm)
    return float(np.mean(r * r))


def contact_metric(foot_velocities: np.ndarray, contacts: np.ndarray) -> float:
    """Mean over segments of ``|foot velocity * contact mask|^2``.

    ``foot_velocities`` is (M, F, 3) and ``contacts`` is (M, F), both sampled
    at the segment start frames.
    """
    fv = np.asarray(foot_velocities, dtype=np.float64)
    g = np.asarray(contacts, dtype=np.float64)
    if fv.ndim != 3 or fv.shape[2] != 3 or g.shape != fv.shape[:2]:
        raise ShapeMismatch("foot velocities must be (M, F, 3) with contacts (M, F)",
                            velocities=list(fv.shape), contacts=list(g.shape))
    masked = fv * g[:, :, None]
    return float(np.mean(np.sum(masked * masked, axis=(1, 2))))


def total_metric(components: MetricComponents, weights: MetricWeights) -> float:
    values = asdict(components)
    if not all(np.isfinite(v) for v in values.values()):
        raise InvalidArgument("metric components must be finite", components=values)
    return (
        weights.w_recon * components.recon
        + weights.w_joint * components.joint
        + weights.w_vel * components.vel
        + weights.w_contact * components.contact
        + weights.w_coherent * components.coherent
    )


# -- foot contact ------------------------------------------------------------------


def _feet(positions: np.ndarray, skeleton: Skeleton) -> np.ndarray:
    if not skeleton.foot_joint_indices:
        raise NoFootJoints("skeleton declares no foot joints")
    return positions[:, list(skeleton.foot_joint_indices), :]


def _horizontal_speed(feet: np.ndarray, up_axis: int) -> np.ndarray:
    vel = np.zeros_like(feet)
    if feet.shape[0] >= 2:
        vel[:-1] = feet[1:] - feet[:-1]
        vel[-1] = vel[-2]
    vel[..., up_axis] = 0.0
    return np.linalg.norm(vel, axis=-1)


def _cartesian_positions(motion: MotionSequence, skeleton: Skeleton) -> np.ndarray:
    if motion.representation is not Representation.CARTESIAN:
        raise WrongRepresentation("contact analysis needs Cartesian motion; convert with FK first")
    if motion.joint_count != skeleton.joint_count:
        raise ShapeMismatch("skeleton and motion joint counts differ")
    return motion.joint_positions()


def detect_contacts(
    motion: MotionSequence, skeleton: Skeleton, thresholds: ContactThresholds = ContactThresholds()
) -> ContactLabels:
    feet = _feet(_cartesian_positions(motion, skeleton), skeleton)
    height = feet[..., thresholds.up_axis]
    speed = _horizontal_speed(feet, thresholds.up_axis)
    labels = ((height <= thresholds.max_height) & (speed <= thresholds.max_speed)).astype(np.int8)
    return ContactLabels(labels, thresholds)


def foot_skating_ratio(
    motion: MotionSequence, skeleton: Skeleton, thresholds: ContactThresholds = ContactThresholds()
) -> float:
    """Fraction of frames where some grounded foot slides faster than ``skate_speed``."""
    feet = _feet(_cartesian_positions(motion, skeleton), skeleton)
    grounded = feet[..., thresholds.up_axis] < thresholds.max_height
    sliding = _horizontal_speed(feet, thresholds.up_axis) > thresholds.skate_speed
    return float(np.mean(np.any(grounded & sliding, axis=1)))


def mpjpe(a: MotionSequence, b: MotionSequence, skeleton: Skeleton | None = None) -> float:
    """Mean per-joint position error; rot6d inputs go through FK."""
    if a.frame_count != b.frame_count or a.joint_count != b.joint_count or a.representation is not b.representation:
        raise ShapeMismatch(
            "motions differ in shape",
            a=[a.frame_count, a.joint_count, a.representation.value],
            b=[b.frame_count, b.joint_count, b.representation.value],
        )
    pa = to_joint_positions(a, skeleton)
    pb = to_joint_positions(b, skeleton)
    return float(np.mean(np.linalg.norm(pa - pb, axis=-1)))


# -- supermotion-level contact helpers ------------------------------------------------


def segment_start_foot_state(
    sm: SuperMotionSequence, skeleton: Skeleton, thresholds: ContactThresholds = ContactThresholds()
) -> tuple[np.ndarray, np.ndarray]:
    """Foot velocities (M, F, 3) and contact labels (M, F) at segment starts of the decoded motion."""
    motion = decode(sm)
    positions = to_joint_positions(motion, skeleton)
    if motion.representation is Representation.ROT6D:
        motion = MotionSequence(positions.reshape(motion.frame_count, -1), Representation.CARTESIAN,
                                motion.joint_count, motion.fps)
    feet = _feet(positions, skeleton)
    vel = np.zeros_like(feet)
    if feet.shape[0] >= 2:
        vel[:-1] = feet[1:] - feet[:-1]
        vel[-1] = vel[-2]
    contacts = detect_contacts(motion, skeleton, thresholds).labels
    t = sm.start_times
    return vel[t], contacts[t]


def all_metrics(
    a: SuperMotionSequence,
    b: SuperMotionSequence,
    weights: MetricWeights = MetricWeights(),
    skeleton: Skeleton | None = None,
    thresholds: ContactThresholds = ContactThresholds(),
) -> dict[str, float | None]:
    """Every supermotion metric of prediction ``b`` against reference ``a``.

    Terms that cannot be evaluated (no skeleton, Cartesian input for the FK
    term, a single segment for coherence) are reported as ``None`` and
    contribute nothing to the total.
    """
    out: dict[str, float | None] = {
        "recon": recon_metric(a, b),
        "vel": velocity_metric(a, b),
        "joint": None,
        "contact": None,
        "coherent": coherent_metric(b) if b.segment_count >= 2 else None,
    }
    if skeleton is not None:
        if a.representation is Representation.ROT6D:
            out["joint"] = joint_metric(a, b, skeleton)
        if skeleton.foot_joint_indices:
            fv, g = segment_start_foot_state(b, skeleton, thresholds)
            out["contact"] = contact_metric(fv, g)
    comps = MetricComponents(**{k: (v if v is not None else 0.0) for k, v in out.items()})
    out["total"] = total_metric(comps, weights)
    return out
