"""Whole-body centre-of-mass tracking for seated wheelchair users.

The pelvis and lower body are occluded in a wheelchair, so they are
expressed once in wheelchair coordinates during calibration and carried by
the wheelchair cluster afterwards; only the head, trunk, arms and
wheelchair are tracked. The estimated CoM ground projection is validated
against the centre of pressure measured by four under-wheel force plates.
"""

from .anthropometry import AnthropometricTable, load_table, load_packaged_table
from .body import (
    CalibratedBody,
    ComSample,
    ComTrajectory,
    Subject,
    WheelchairGeometry,
    average_static,
    calibrate_body,
    com_frame,
    com_trajectory,
    wheelchair_lcs,
)
from .clusters import (
    Frame,
    MarkerCluster,
    MarkerTrial,
    PelvisCloud,
    define_cluster,
    extend_cluster,
    register_pelvis_cloud,
    track_and_reconstruct,
)
from .forceplate import (
    CopSample,
    ForceRecord,
    ZeroOffset,
    compute_zero_offset,
    cop_average,
    cop_instant,
)
from .geometry import LabelledPointSet, RigidTransform, build_lcs, midpoint, rigid_fit
from .pipeline import run_pipeline
from .session import load_session
from .synth import GroundTruth, SyntheticScenario, generate
from .validation import (
    BlandAltmanStats,
    PostureStats,
    TrialResult,
    ValidationReport,
    bland_altman,
    posture_stats,
)

__version__ = "0.1.0"

__all__ = [
    "AnthropometricTable",
    "BlandAltmanStats",
    "CalibratedBody",
    "ComSample",
    "ComTrajectory",
    "CopSample",
    "ForceRecord",
    "Frame",
    "GroundTruth",
    "LabelledPointSet",
    "MarkerCluster",
    "MarkerTrial",
    "PelvisCloud",
    "PostureStats",
    "RigidTransform",
    "Subject",
    "SyntheticScenario",
    "TrialResult",
    "ValidationReport",
    "WheelchairGeometry",
    "ZeroOffset",
    "average_static",
    "bland_altman",
    "build_lcs",
    "calibrate_body",
    "com_frame",
    "com_trajectory",
    "compute_zero_offset",
    "cop_average",
    "cop_instant",
    "define_cluster",
    "extend_cluster",
    "generate",
    "load_packaged_table",
    "load_session",
    "load_table",
    "midpoint",
    "posture_stats",
    "register_pelvis_cloud",
    "rigid_fit",
    "run_pipeline",
    "track_and_reconstruct",
    "wheelchair_lcs",
]
