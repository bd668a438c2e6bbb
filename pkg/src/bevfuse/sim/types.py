"""Domain types for the synthetic world and its sensor outputs."""

from dataclasses import dataclass, field

import numpy as np

PROFILES = ("constant-velocity", "constant-acceleration", "turn", "stop-and-go")


class SimConfigError(ValueError):
    pass


@dataclass
class Actor:
    """One vehicle with an analytic motion profile, state given at t = 0."""

    actor_id: int
    x: float
    y: float
    heading: float
    length: float
    width: float
    speed: float
    accel: float = 0.0
    yaw_rate: float = 0.0
    profile: str = "constant-velocity"
    go_time: float = 0.0  # stop-and-go only: departure time
    rcs_base: float = 15.0
    actor_class: str = "vehicle"

    def __post_init__(self):
        if self.length <= 0 or self.width <= 0:
            raise SimConfigError(f"actor {self.actor_id}: non-positive size")
        if self.speed < 0:
            raise SimConfigError(f"actor {self.actor_id}: negative speed")
        if self.profile not in PROFILES:
            raise SimConfigError(f"actor {self.actor_id}: unknown profile {self.profile!r}")


@dataclass
class EgoPose:
    t: float
    x: float
    y: float
    heading: float
    vx: float
    vy: float


@dataclass
class LidarSweep:
    t: float
    points: np.ndarray  # (N, 3) x, y, z


@dataclass
class RadarSweep:
    t: float
    sweep_index: int
    points: np.ndarray  # (N, 5) x, y, rcs, vx, vy


@dataclass
class Lane:
    width: float
    centerline: np.ndarray  # (N, 2) polyline


@dataclass
class ActorLabel:
    actor_id: int
    box: np.ndarray  # (5,) x, y, heading, length, width
    speed: float
    accel: float
    yaw_rate: float
    profile: str
    waypoints: np.ndarray  # (T, 3) rows of (dt, x, y), dt = 0.0 .. horizon
    lidar_point_count: int
    distance_to_ego: float


@dataclass
class LabeledFrame:
    frame_id: str
    t_ref: float
    ego_history: list  # EgoPose, oldest first, timestamps strictly increasing
    lidar_sweeps: list  # LidarSweep in the reference frame, oldest first
    radar_sweeps: list  # RadarSweep in the reference frame, oldest first
    lanes: list  # Lane, reference frame
    labels: list  # ActorLabel


@dataclass
class SimConfig:
    """Scene generator knobs. All SI units, angles in radians unless noted."""

    roi_half: float = 16.0
    n_actors_min: int = 4
    n_actors_max: int = 9
    # motion profile mix; dense urban scenes are dominated by parked vehicles
    p_static: float = 0.85
    p_cv: float = 0.06
    p_ca: float = 0.04
    p_turn: float = 0.03
    p_stopgo: float = 0.02
    cv_speed: tuple = (2.0, 10.0)
    ca_speed: tuple = (1.5, 7.0)
    ca_accel: tuple = (0.8, 4.0)  # magnitude range; sign drawn separately
    ca_decel_frac: float = 0.35
    turn_speed: tuple = (2.0, 8.0)
    turn_yaw_rate: tuple = (0.15, 0.5)  # magnitude
    stopgo_speed: tuple = (2.0, 6.0)
    stopgo_accel: tuple = (1.5, 3.5)
    actor_length: tuple = (4.0, 5.5)
    actor_width: tuple = (1.8, 2.2)

    ego_speed: float = 2.0
    ego_pose_rate_hz: float = 10.0

    lidar_rate_hz: float = 10.0
    lidar_sweeps: int = 5
    lidar_max_range: float = 60.0
    lidar_points_at_10m: float = 50.0
    lidar_sigma: float = 0.02
    lidar_occlusion: bool = True
    lidar_ground_rate: float = 120.0
    actor_height: float = 1.6

    radar_period_s: float = 0.08
    radar_phase_s: float = 0.013  # offset vs the lidar clock: never synchronized
    radar_history_s: float = 0.5
    radar_lambda: float = 1.8  # mean points per actor per sweep at radar_ref_range
    radar_ref_range: float = 15.0
    radar_lambda_max: float = 3.0
    radar_sigma_az_deg: float = 1.2
    radar_sigma_range: float = 0.15
    radar_sigma_v: float = 0.1
    radar_clutter_rate: float = 3.0

    scenes: int = 40  # dataset size knob used by the generate command
    frames_per_scene: int = 3
    frame_period_s: float = 0.5
    first_frame_t: float = 1.0
    horizon_s: float = 3.0
    waypoint_step_s: float = 0.5

    lane_count: int = 3
    lane_width: float = 3.6
    curved_lane: bool = True

    def __post_init__(self):
        if self.roi_half <= 0:
            raise SimConfigError(f"zero-area ROI: roi_half={self.roi_half}")
        for name in ("lidar_sigma", "radar_sigma_az_deg", "radar_sigma_range", "radar_sigma_v"):
            if getattr(self, name) < 0:
                raise SimConfigError(f"negative noise level: {name}={getattr(self, name)}")
        if self.n_actors_min < 0 or self.n_actors_max < self.n_actors_min:
            raise SimConfigError(
                f"bad actor count range [{self.n_actors_min}, {self.n_actors_max}]"
            )
        mix = self.p_static + self.p_cv + self.p_ca + self.p_turn + self.p_stopgo
        if abs(mix - 1.0) > 1e-6:
            raise SimConfigError(f"profile mix sums to {mix}, expected 1")
        if self.radar_period_s <= 0 or self.lidar_rate_hz <= 0:
            raise SimConfigError("sweep rates must be positive")
        if self.radar_history_s < 0:
            raise SimConfigError("radar history must be >= 0")

    @property
    def radar_sweep_count(self):
        """Sweeps covering the configured history at the radar's own rate."""
        return int(np.floor(self.radar_history_s / self.radar_period_s + 1e-9)) + 1
