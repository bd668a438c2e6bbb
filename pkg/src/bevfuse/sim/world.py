"""Scene construction: lanes, ego path, actor spawning, frame assembly."""

import numpy as np

from . import geometry as geo
from .motion import actor_state, future_waypoints
from .sensors import sample_lidar, sample_radar
from .transforms import transform_to_latest_frame
from .types import Actor, ActorLabel, EgoPose, LabeledFrame, Lane, SimConfig


def build_lanes(cfg, rng):
    """A few straight lanes plus one arc, roughly spanning the ROI."""
    span = cfg.roi_half * 2.5
    lanes = []
    offsets = (np.arange(cfg.lane_count) - (cfg.lane_count - 1) / 2) * cfg.lane_width
    jitter = rng.uniform(-0.5, 0.5, size=cfg.lane_count)
    for off, j in zip(offsets, jitter):
        xs = np.linspace(-span, span, 25)
        ys = np.full_like(xs, off + j)
        lanes.append(Lane(width=cfg.lane_width, centerline=np.column_stack([xs, ys])))
    if cfg.curved_lane:
        radius = rng.uniform(0.8, 1.2) * cfg.roi_half
        cx, cy = span * 0.3, -radius + offsets[0] - cfg.lane_width
        ang = np.linspace(np.pi / 2, np.pi / 6, 20)
        arc = np.column_stack([cx + radius * np.cos(ang), cy + radius * np.sin(ang)])
        lanes.append(Lane(width=cfg.lane_width, centerline=arc))
    return lanes


def ego_trajectory(cfg):
    """Ego drives straight along +x at constant speed, starting at the origin."""

    def pose(t):
        return EgoPose(
            t=t, x=cfg.ego_speed * t, y=0.0, heading=0.0, vx=cfg.ego_speed, vy=0.0
        )

    return pose


def _draw_profile(cfg, rng):
    u = rng.random()
    for name, p in (
        ("static", cfg.p_static),
        ("constant-velocity", cfg.p_cv),
        ("constant-acceleration", cfg.p_ca),
        ("turn", cfg.p_turn),
        ("stop-and-go", cfg.p_stopgo),
    ):
        if u < p:
            return name
        u -= p
    return "stop-and-go"


def spawn_actors(cfg, rng, center_xy):
    """Actors scattered around the scene center, no initial overlaps."""
    n = int(rng.integers(cfg.n_actors_min, cfg.n_actors_max + 1))
    actors = []
    for i in range(n):
        profile = _draw_profile(cfg, rng)
        length = rng.uniform(*cfg.actor_length)
        width = rng.uniform(*cfg.actor_width)
        placed = False
        for _ in range(40):
            x = center_xy[0] + rng.uniform(-cfg.roi_half * 0.85, cfg.roi_half * 0.85)
            y = center_xy[1] + rng.uniform(-cfg.roi_half * 0.85, cfg.roi_half * 0.85)
            if any(
                np.hypot(x - a.x, y - a.y) < 1.2 * (length + a.length) / 2 for a in actors
            ):
                continue
            placed = True
            break
        if not placed:
            continue
        heading = rng.uniform(-np.pi, np.pi)
        speed = accel = yaw = 0.0
        go_time = 0.0
        if profile == "static":
            profile = "constant-velocity"  # static is CV with zero speed
        elif profile == "constant-velocity":
            speed = rng.uniform(*cfg.cv_speed)
        elif profile == "constant-acceleration":
            speed = rng.uniform(*cfg.ca_speed)
            accel = rng.uniform(*cfg.ca_accel)
            if rng.random() < cfg.ca_decel_frac:
                accel = -accel
        elif profile == "turn":
            speed = rng.uniform(*cfg.turn_speed)
            yaw = rng.uniform(*cfg.turn_yaw_rate) * (1 if rng.random() < 0.5 else -1)
        elif profile == "stop-and-go":
            speed = rng.uniform(*cfg.stopgo_speed)
            accel = rng.uniform(*cfg.stopgo_accel)
            go_time = rng.uniform(0.0, 1.5)
        actors.append(
            Actor(
                actor_id=i,
                x=x,
                y=y,
                heading=heading,
                length=length,
                width=width,
                speed=speed,
                accel=accel,
                yaw_rate=yaw,
                profile=profile,
                go_time=go_time,
                rcs_base=rng.uniform(8.0, 25.0),
            )
        )
    return actors


def radar_sweep_times(cfg, t_ref):
    """The newest cfg.radar_sweep_count radar ticks at or before t_ref.

    The radar clock runs at its own period and phase, so sweeps are never
    aligned with the lidar clock; oldest first.
    """
    k = int(np.floor((t_ref - cfg.radar_phase_s) / cfg.radar_period_s + 1e-9))
    times = [cfg.radar_phase_s + (k - j) * cfg.radar_period_s for j in range(cfg.radar_sweep_count)]
    return times[::-1]


def generate_scene(cfg, seed):
    """Deterministic labeled frame sequence for one synthetic scene.

    Actors follow their closed-form motion profiles exactly, so labels are
    analytic future poses. All sweeps, lanes and labels in each frame are
    expressed in the ego frame at the frame's reference time (the newest
    lidar sweep).
    """
    if not isinstance(cfg, SimConfig):
        raise TypeError("cfg must be a SimConfig")
    rng = np.random.default_rng(seed)
    lanes = build_lanes(cfg, rng)
    ego_at = ego_trajectory(cfg)

    mid_t = cfg.first_frame_t + 0.5 * (cfg.frames_per_scene - 1) * cfg.frame_period_s
    mid = ego_at(mid_t)
    actors = spawn_actors(cfg, rng, (mid.x, mid.y))

    lidar_period = 1.0 / cfg.lidar_rate_hz
    frames = []
    for k in range(cfg.frames_per_scene):
        t_ref = cfg.first_frame_t + k * cfg.frame_period_s
        lidar_times = [t_ref - i * lidar_period for i in range(cfg.lidar_sweeps)][::-1]
        radar_times = radar_sweep_times(cfg, t_ref)

        t_lo = min(lidar_times[0], radar_times[0]) - 0.2
        pose_dt = 1.0 / cfg.ego_pose_rate_hz
        n_hist = int(np.ceil((t_ref - t_lo) / pose_dt)) + 1
        history = [ego_at(t_ref - (n_hist - 1 - i) * pose_dt) for i in range(n_hist)]

        lidar = []
        for t in lidar_times:
            p = ego_at(t)
            lidar.append(sample_lidar(actors, (p.x, p.y, p.heading), t, cfg, rng))
        radar = []
        for m, t in enumerate(radar_times):
            p = ego_at(t)
            radar.append(sample_radar(actors, (p.x, p.y, p.heading), t, cfg, rng, sweep_index=m))

        lidar = transform_to_latest_frame(lidar, history, t_ref=t_ref)
        radar = transform_to_latest_frame(radar, history, t_ref=t_ref)

        ref = ego_at(t_ref)
        ref_lanes = [
            Lane(
                width=ln.width,
                centerline=geo.world_to_ego(ln.centerline, ref.x, ref.y, ref.heading),
            )
            for ln in lanes
        ]

        labels = _build_labels(cfg, actors, ref, t_ref, lidar[-1])
        frames.append(
            LabeledFrame(
                frame_id=f"scene{seed}_frame{k}",
                t_ref=t_ref,
                ego_history=history,
                lidar_sweeps=lidar,
                radar_sweeps=radar,
                lanes=ref_lanes,
                labels=labels,
            )
        )
    return frames


def _build_labels(cfg, actors, ref, t_ref, latest_lidar):
    """Labels for in-ROI actors carrying at least one lidar point."""
    labels = []
    for actor in actors:
        ax, ay, ah, speed, accel, yaw = actor_state(actor, t_ref)
        pos_ref = geo.world_to_ego([[ax, ay]], ref.x, ref.y, ref.heading)[0]
        if abs(pos_ref[0]) > cfg.roi_half or abs(pos_ref[1]) > cfg.roi_half:
            continue
        heading_ref = geo.wrap_angle(ah - ref.heading)
        inside = geo.point_in_box(
            latest_lidar.points[:, :2],
            pos_ref[0],
            pos_ref[1],
            heading_ref,
            actor.length + 0.15,  # noise margin around the true box
            actor.width + 0.15,
        )
        count = int(inside.sum())
        if count < 1:
            continue
        wp_world = future_waypoints(actor, t_ref, cfg.horizon_s, cfg.waypoint_step_s)
        wp_ref = geo.world_to_ego(wp_world[:, 1:3], ref.x, ref.y, ref.heading)
        labels.append(
            ActorLabel(
                actor_id=actor.actor_id,
                box=np.array([pos_ref[0], pos_ref[1], heading_ref, actor.length, actor.width]),
                speed=float(speed),
                accel=float(accel),
                yaw_rate=float(yaw),
                profile=actor.profile,
                waypoints=np.column_stack([wp_world[:, 0], wp_ref]),
                lidar_point_count=count,
                distance_to_ego=float(np.hypot(pos_ref[0], pos_ref[1])),
            )
        )
    return labels
