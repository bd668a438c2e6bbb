"""JSON Lines dataset files: one frame per line, documented schema.

Schema (schema_version 1), all SI units and radians, arrays as nested
lists:

    {
      "schema_version": 1,
      "frame_id": str,
      "t_ref": float,
      "ego_history": [[t, x, y, heading, vx, vy], ...],
      "lidar_sweeps": [{"t": float, "points": [[x, y, z], ...]}, ...],
      "radar_sweeps": [{"t": float, "sweep_index": int,
                        "points": [[x, y, rcs, vx, vy], ...]}, ...],
      "lanes": [{"width": float, "centerline": [[x, y], ...]}, ...],
      "labels": [{"actor_id": int, "box": [x, y, heading, length, width],
                  "speed": float, "accel": float, "yaw_rate": float,
                  "profile": str, "waypoints": [[dt, x, y], ...],
                  "lidar_point_count": int, "distance_to_ego": float}, ...]
    }

Sweeps, lanes and labels are already expressed in the frame's reference
frame (ego pose at t_ref).
"""

import json

import numpy as np

from .types import ActorLabel, EgoPose, LabeledFrame, Lane, LidarSweep, RadarSweep

SCHEMA_VERSION = 1


class DatasetError(ValueError):
    pass


def _round(arr):
    # 6 decimals keeps files compact; sub-micrometer truncation is far below
    # every configured noise floor
    return np.round(np.asarray(arr, dtype=float), 6).tolist()


def frame_to_record(frame):
    return {
        "schema_version": SCHEMA_VERSION,
        "frame_id": frame.frame_id,
        "t_ref": frame.t_ref,
        "ego_history": [[p.t, p.x, p.y, p.heading, p.vx, p.vy] for p in frame.ego_history],
        "lidar_sweeps": [{"t": s.t, "points": _round(s.points)} for s in frame.lidar_sweeps],
        "radar_sweeps": [
            {"t": s.t, "sweep_index": s.sweep_index, "points": _round(s.points)}
            for s in frame.radar_sweeps
        ],
        "lanes": [{"width": ln.width, "centerline": _round(ln.centerline)} for ln in frame.lanes],
        "labels": [
            {
                "actor_id": lb.actor_id,
                "box": _round(lb.box),
                "speed": round(lb.speed, 6),
                "accel": round(lb.accel, 6),
                "yaw_rate": round(lb.yaw_rate, 6),
                "profile": lb.profile,
                "waypoints": _round(lb.waypoints),
                "lidar_point_count": lb.lidar_point_count,
                "distance_to_ego": round(lb.distance_to_ego, 6),
            }
            for lb in frame.labels
        ],
    }


def record_to_frame(rec):
    if rec.get("schema_version") != SCHEMA_VERSION:
        raise DatasetError(f"unsupported schema_version {rec.get('schema_version')!r}")
    return LabeledFrame(
        frame_id=rec["frame_id"],
        t_ref=rec["t_ref"],
        ego_history=[EgoPose(*row) for row in rec["ego_history"]],
        lidar_sweeps=[
            LidarSweep(t=s["t"], points=np.asarray(s["points"], dtype=float).reshape(-1, 3))
            for s in rec["lidar_sweeps"]
        ],
        radar_sweeps=[
            RadarSweep(
                t=s["t"],
                sweep_index=s["sweep_index"],
                points=np.asarray(s["points"], dtype=float).reshape(-1, 5),
            )
            for s in rec["radar_sweeps"]
        ],
        lanes=[
            Lane(width=ln["width"], centerline=np.asarray(ln["centerline"], dtype=float))
            for ln in rec["lanes"]
        ],
        labels=[
            ActorLabel(
                actor_id=lb["actor_id"],
                box=np.asarray(lb["box"], dtype=float),
                speed=lb["speed"],
                accel=lb["accel"],
                yaw_rate=lb["yaw_rate"],
                profile=lb["profile"],
                waypoints=np.asarray(lb["waypoints"], dtype=float).reshape(-1, 3),
                lidar_point_count=lb["lidar_point_count"],
                distance_to_ego=lb["distance_to_ego"],
            )
            for lb in rec["labels"]
        ],
    )


def write_frames(path, frames):
    with open(path, "w", encoding="utf-8") as f:
        for frame in frames:
            f.write(json.dumps(frame_to_record(frame), separators=(",", ":")))
            f.write("\n")


def read_frames(path):
    frames = []
    with open(path, encoding="utf-8") as f:
        for lineno, line in enumerate(f, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                rec = json.loads(line)
            except json.JSONDecodeError as exc:
                raise DatasetError(f"{path}:{lineno}: invalid JSON ({exc})") from exc
            frames.append(record_to_frame(rec))
    return frames
