"""Re-expressing sweeps in the coordinate frame of the newest sweep."""

from dataclasses import replace

import numpy as np

from .geometry import interpolate_pose, rot2d
from .types import LidarSweep, RadarSweep


def transform_to_latest_frame(sweeps, ego_history, t_ref=None):
    """Move every sweep into the ego frame at the reference time.

    Each sweep must carry points expressed in the ego frame at its own
    timestamp; the ego pose at any sweep time is linearly interpolated
    from the history. Positions are rotated and translated, velocity
    vectors are rotated only. The reference defaults to the newest sweep.
    """
    if t_ref is None:
        t_ref = max(s.t for s in sweeps)
    xr, yr, hr = interpolate_pose(ego_history, t_ref)
    rr = rot2d(hr)
    out = []
    for sweep in sweeps:
        xs, ys, hs = interpolate_pose(ego_history, sweep.t)
        rel_rot = rr.T @ rot2d(hs)
        rel_t = rr.T @ np.array([xs - xr, ys - yr])
        pts = sweep.points.copy()
        if isinstance(sweep, RadarSweep):
            pts[:, 0:2] = pts[:, 0:2] @ rel_rot.T + rel_t
            pts[:, 3:5] = pts[:, 3:5] @ rel_rot.T
        elif isinstance(sweep, LidarSweep):
            pts[:, 0:2] = pts[:, 0:2] @ rel_rot.T + rel_t
        else:
            raise TypeError(f"unsupported sweep type {type(sweep).__name__}")
        out.append(replace(sweep, points=pts))
    return out
