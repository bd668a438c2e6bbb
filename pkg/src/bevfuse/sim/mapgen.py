"""Lane rasterization onto a BEV grid.

Output channels: lane-occupancy mask and the (cos, sin) of the local lane
direction; cells outside every lane band are zero. Where lanes overlap,
the nearest centerline wins.
"""

import numpy as np


def rasterize_map(lanes, grid):
    centers = grid.cell_centers()  # (N, 2)
    n = centers.shape[0]
    best_dist = np.full(n, np.inf)
    best_dir = np.zeros((n, 2))
    covered = np.zeros(n, dtype=bool)
    for lane in lanes:
        poly = np.asarray(lane.centerline, dtype=float)
        if len(poly) < 2:
            continue
        dist, tangent = _distance_to_polyline(centers, poly)
        inside = dist <= lane.width / 2
        better = inside & (dist < best_dist)
        best_dist[better] = dist[better]
        best_dir[better] = tangent[better]
        covered |= inside
    raster = np.zeros((3, grid.ny, grid.nx))
    raster[0] = covered.reshape(grid.ny, grid.nx)
    raster[1] = np.where(covered, best_dir[:, 0], 0.0).reshape(grid.ny, grid.nx)
    raster[2] = np.where(covered, best_dir[:, 1], 0.0).reshape(grid.ny, grid.nx)
    return raster


def _distance_to_polyline(points, poly):
    """Min distance from each point to the polyline and the unit tangent of
    the closest segment."""
    p0 = poly[:-1]  # (S, 2)
    seg = poly[1:] - p0
    seg_len2 = np.maximum((seg**2).sum(axis=1), 1e-12)
    # (N, S) projection parameter clamped to the segment
    rel = points[:, None, :] - p0[None, :, :]
    t = np.clip((rel * seg[None, :, :]).sum(axis=2) / seg_len2[None, :], 0.0, 1.0)
    closest = p0[None, :, :] + t[:, :, None] * seg[None, :, :]
    d2 = ((points[:, None, :] - closest) ** 2).sum(axis=2)
    idx = d2.argmin(axis=1)
    dist = np.sqrt(d2[np.arange(len(points)), idx])
    tangent = seg[idx] / np.sqrt(seg_len2[idx])[:, None]
    return dist, tangent
