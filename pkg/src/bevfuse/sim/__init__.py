"""Deterministic synthetic world: kinematic actors, lidar/radar models,
a toy lane map, and labeled frame generation."""

from .types import (
    Actor,
    ActorLabel,
    EgoPose,
    LabeledFrame,
    Lane,
    LidarSweep,
    RadarSweep,
    SimConfig,
    SimConfigError,
)
from .motion import actor_state, future_waypoints, point_velocity
from .sensors import sample_lidar, sample_radar
from .transforms import transform_to_latest_frame
from .mapgen import rasterize_map
from .world import generate_scene
from .dataset import DatasetError, read_frames, write_frames

__all__ = [
    "Actor",
    "ActorLabel",
    "DatasetError",
    "EgoPose",
    "LabeledFrame",
    "Lane",
    "LidarSweep",
    "RadarSweep",
    "SimConfig",
    "SimConfigError",
    "actor_state",
    "future_waypoints",
    "generate_scene",
    "point_velocity",
    "rasterize_map",
    "read_frames",
    "sample_lidar",
    "sample_radar",
    "transform_to_latest_frame",
    "write_frames",
]
