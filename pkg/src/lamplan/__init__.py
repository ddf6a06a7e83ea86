"""Laminectomy cutting-plane planning from vertebral landmarks.

Pipeline: preprocess a vertebra volume (window/crop/resample), localize the
seven landmarks via per-channel heatmap argmax (targets from ground truth or
the bundled inference engine), fit the personalized coordinate frame,
generate the cutting planes, and grade them A/B/C against ground truth.
"""

from ._kernels import BACKEND as KERNEL_BACKEND
from .frame import CutPlane, Frame, PlanMode, fit_frame, plan_planes, project_onto_plane
from .grading import Grade, GradeResult, PlanReport, aggregate, grade_plane
from .heatmap import (
    HeatmapStack,
    LocalizationReport,
    aggregate_errors,
    localization_error,
    localize,
    localize_landmarks,
    make_target,
    make_target_stack,
    mse_loss,
)
from .phantom import PhantomParams, add_noise, generate_phantom, jitter_landmarks, phantom_landmarks, random_params
from .volume import (
    LANDMARK_NAMES,
    BoundingBox,
    LandmarkSet,
    Volume,
    apply_window,
    crop,
    map_landmarks,
    resample,
    voxel_to_world,
    world_to_voxel,
)

__version__ = "0.1.0"

__all__ = [
    "BoundingBox",
    "CutPlane",
    "Frame",
    "Grade",
    "GradeResult",
    "HeatmapStack",
    "KERNEL_BACKEND",
    "LANDMARK_NAMES",
    "LandmarkSet",
    "LocalizationReport",
    "PhantomParams",
    "PlanMode",
    "PlanReport",
    "Volume",
    "add_noise",
    "aggregate",
    "aggregate_errors",
    "apply_window",
    "crop",
    "fit_frame",
    "generate_phantom",
    "grade_plane",
    "jitter_landmarks",
    "localization_error",
    "localize",
    "localize_landmarks",
    "make_target",
    "make_target_stack",
    "map_landmarks",
    "mse_loss",
    "phantom_landmarks",
    "plan_planes",
    "project_onto_plane",
    "random_params",
    "resample",
    "voxel_to_world",
    "world_to_voxel",
]
