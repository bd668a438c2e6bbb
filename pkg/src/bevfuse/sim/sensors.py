"""Lidar and radar point samplers.

Both emit points in the ego frame at the sweep time. Lidar is dense with
low position noise; radar is sparse, with azimuthal error far larger than
radial error and a per-point ego-motion-compensated radial velocity.
"""

import numpy as np

from . import geometry as geo
from .motion import actor_state, point_velocity
from .types import LidarSweep, RadarSweep


def sample_lidar(actors, ego, t, cfg, rng):
    """One lidar sweep: perimeter returns per visible actor plus ground hits."""
    ego_xy = np.array([ego[0], ego[1]])
    states = {a.actor_id: actor_state(a, t) for a in actors}
    chunks = []
    for actor in actors:
        ax, ay, ah, _, _, _ = states[actor.actor_id]
        rng_range = np.hypot(ax - ego_xy[0], ay - ego_xy[1])
        if rng_range > cfg.lidar_max_range:
            continue
        expected = cfg.lidar_points_at_10m * 10.0 / max(rng_range, 1.0)
        n = int(rng.poisson(expected))
        segs = geo.visible_perimeter_segments(ax, ay, ah, actor.length, actor.width, ego_xy)
        pts = geo.sample_on_segments(rng, segs, n)
        if len(pts) == 0:
            continue
        if cfg.lidar_occlusion:
            keep = np.ones(len(pts), dtype=bool)
            for other in actors:
                if other.actor_id == actor.actor_id:
                    continue
                ox, oy, oh, _, _, _ = states[other.actor_id]
                keep &= ~geo.segments_blocked(
                    ego_xy, pts, (ox, oy, oh, other.length, other.width)
                )
            pts = pts[keep]
        z = rng.uniform(0.15, cfg.actor_height, size=len(pts))
        noise = rng.normal(0.0, cfg.lidar_sigma, size=(len(pts), 3))
        chunk = np.column_stack([pts, z]) + noise
        chunks.append(chunk)
    n_ground = int(rng.poisson(cfg.lidar_ground_rate))
    if n_ground:
        r = np.sqrt(rng.uniform(1.0, cfg.lidar_max_range**2, size=n_ground))
        phi = rng.uniform(-np.pi, np.pi, size=n_ground)
        gz = rng.normal(0.0, 0.02, size=n_ground)
        ground = np.column_stack([r * np.cos(phi), r * np.sin(phi), gz])
        ground[:, :2] += ego_xy
        chunks.append(ground)
    world = np.vstack(chunks) if chunks else np.zeros((0, 3))
    in_range = np.hypot(world[:, 0] - ego_xy[0], world[:, 1] - ego_xy[1]) <= cfg.lidar_max_range
    world = world[in_range]
    ego_pts = np.column_stack(
        [geo.world_to_ego(world[:, :2], ego[0], ego[1], ego[2]), world[:, 2]]
    )
    return LidarSweep(t=t, points=ego_pts)


def radial_velocity_vector(point_xy, sensor_xy, v_point, sigma_v, rng):
    """Compensated radial velocity: ((v - 0) . rhat) rhat, noise on magnitude.

    Noise perturbs the magnitude only, so the vector stays exactly parallel
    to the sensor->point ray.
    """
    ray = np.asarray(point_xy) - np.asarray(sensor_xy)
    norm = np.linalg.norm(ray)
    if norm < 1e-9:
        return np.zeros(2)
    rhat = ray / norm
    mag = float(np.dot(v_point, rhat))
    if sigma_v > 0:
        mag = mag + rng.normal(0.0, sigma_v)
    return mag * rhat


def sample_radar(actors, ego, t, cfg, rng, sweep_index=0):
    """One radar sweep: sparse per-actor returns plus uniform clutter."""
    ego_xy = np.array([ego[0], ego[1]])
    rows = []
    for actor in actors:
        ax, ay, ah, _, _, _ = actor_state(actor, t)
        rng_range = np.hypot(ax - ego_xy[0], ay - ego_xy[1])
        lam = cfg.radar_lambda * min(1.0, cfg.radar_ref_range / max(rng_range, 1.0))
        lam = min(lam, cfg.radar_lambda_max)
        n = int(rng.poisson(lam))
        if n == 0:
            continue
        emitted = geo.sample_in_box(rng, ax, ay, ah, actor.length, actor.width, n)
        for px, py in emitted:
            v_pt = point_velocity(actor, t, px, py)
            v_meas = radial_velocity_vector((px, py), ego_xy, v_pt, cfg.radar_sigma_v, rng)
            # polar position noise around the sensor: azimuth error dominates
            ray = np.array([px, py]) - ego_xy
            r = np.linalg.norm(ray)
            phi = np.arctan2(ray[1], ray[0])
            r_noisy = r + rng.normal(0.0, cfg.radar_sigma_range)
            phi_noisy = phi + rng.normal(0.0, np.deg2rad(cfg.radar_sigma_az_deg))
            pos = ego_xy + r_noisy * np.array([np.cos(phi_noisy), np.sin(phi_noisy)])
            rcs = actor.rcs_base + rng.normal(0.0, 2.0)
            rows.append((pos[0], pos[1], rcs, v_meas[0], v_meas[1]))
    n_clutter = int(rng.poisson(cfg.radar_clutter_rate))
    for _ in range(n_clutter):
        pos = ego_xy + rng.uniform(-cfg.roi_half, cfg.roi_half, size=2)
        v_meas = radial_velocity_vector(pos, ego_xy, np.zeros(2), cfg.radar_sigma_v, rng)
        rcs = rng.uniform(0.0, 8.0)
        rows.append((pos[0], pos[1], rcs, v_meas[0], v_meas[1]))
    world = np.array(rows) if rows else np.zeros((0, 5))
    pts = world.copy()
    if len(pts):
        pts[:, 0:2] = geo.world_to_ego(world[:, 0:2], ego[0], ego[1], ego[2])
        pts[:, 3:5] = world[:, 3:5] @ geo.rot2d(ego[2])
    return RadarSweep(t=t, sweep_index=sweep_index, points=pts)
