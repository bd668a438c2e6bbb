from .backbone import Backbone, MultiScaleBlock
from .detection import Detection, DetectionHead, build_detection_targets, decode_detections, nms
from .network import FusionModel, prepare_frame
from .roi import crop_rotated_roi, rotated_roi_points
from .trajectory import (
    MtpHead,
    MultiPathHead,
    SingleHypothesisHead,
    TrajectoryHypothesis,
    actor_to_ego,
    decode_hypotheses,
    ego_to_actor,
    kmeans_trajectories,
)

__all__ = [
    "Backbone",
    "Detection",
    "DetectionHead",
    "FusionModel",
    "MtpHead",
    "MultiPathHead",
    "MultiScaleBlock",
    "SingleHypothesisHead",
    "TrajectoryHypothesis",
    "actor_to_ego",
    "build_detection_targets",
    "crop_rotated_roi",
    "decode_detections",
    "decode_hypotheses",
    "ego_to_actor",
    "kmeans_trajectories",
    "nms",
    "prepare_frame",
    "rotated_roi_points",
]
