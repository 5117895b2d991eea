"""Supermotion compression of framewise 3D human motion."""
from .apps import (
    DurationPlan,
    SeamReport,
    decompose_duration,
    loop_close,
    loop_seam_report,
    match_music_length,
    retime_supermotions,
)
from .codec import (
    EncodeConfig,
    SuperMotion,
    SuperMotionSequence,
    VelocityMode,
    assign_labels,
    coherence_residual,
    compression_report,
    decode,
    encode,
    fit_clusters,
    group_segments,
    smooth_labels,
)
from .kmeans import ClusterModel, KMeansConfig
from .motion import (
    MotionSequence,
    Representation,
    Skeleton,
    VelocityField,
    compute_velocity_field,
    forward_kinematics,
    matrix_to_rot6d,
    resample_to_length,
    rot6d_to_matrix,
)

__version__ = "0.1.0"
